#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "stepgan/label.hpp"
#include "stepgan/matrix.hpp"
#include "stepgan/nn.hpp"
#include "stepgan/rng.hpp"

namespace stepgan {

// Layer widths of the generator and discriminator stacks.
//
// Default widths: generators are
// noise -> 50 -> 300 -> 128 (PReLU hidden, Tanh output) and the discriminator is
// 128 -> 300 -> 300 -> 300 -> 300 -> n+1 (LeakyReLU hidden, Softmax output).
// Synthetic 2-D experiments shrink the widths and set data_dim = 2.
struct Architecture {
    std::size_t noise_dim = 50;
    std::size_t data_dim = 128;
    std::vector<std::size_t> generator_hidden{50, 300};
    std::vector<std::size_t> discriminator_hidden{300, 300, 300, 300};

    friend bool operator==(const Architecture&, const Architecture&) = default;
};

void validate(const Architecture& arch);

// Standard-normal noise from a seeded stream.
class NoisePrior {
public:
    NoisePrior(std::size_t dim, std::uint64_t seed);

    std::size_t dim() const noexcept { return dim_; }
    Matrix2 sample(std::size_t batch);

private:
    std::size_t dim_;
    RandomStream stream_;
};

struct DecisionRule {
    enum class Kind { Argmax, Threshold };
    Kind kind = Kind::Argmax;
    double threshold = 0.5;  // used by Kind::Threshold, in (0,1)

    static DecisionRule argmax() { return {}; }
    static DecisionRule at_threshold(double tau);
};

// Labels rows of a (n+1)-column probability matrix; the last column is the
// real-data class. Argmax ties resolve toward the lowest class index, so an
// exact tie with a generator class reads as an attack.
std::vector<Label> classify_probabilities(const Matrix2& probabilities, const DecisionRule& rule);

// Argmax with ties toward the lowest index.
std::size_t argmax_row(std::span<const double> row);

// n generators and one (n+1)-class discriminator. Class indices are 0-based:
// generator i owns class i and class n (the last) is real data.
class GanModel {
public:
    GanModel(std::size_t n_generators, Architecture arch, std::uint64_t seed);

    std::size_t n_generators() const noexcept { return generators_.size(); }
    std::size_t real_class() const noexcept { return generators_.size(); }
    const Architecture& architecture() const noexcept { return arch_; }
    std::uint64_t seed() const noexcept { return seed_; }

    DenseNet& generator(std::size_t i);
    const DenseNet& generator(std::size_t i) const;
    DenseNet& discriminator() noexcept { return discriminator_; }
    const DenseNet& discriminator() const noexcept { return discriminator_; }
    NoisePrior& noise() noexcept { return noise_; }

    Matrix2 sample_noise(std::size_t batch) { return noise_.sample(batch); }

    // Read-only paths; safe for concurrent callers.
    Matrix2 generate(std::size_t generator_index, const Matrix2& z) const;
    Matrix2 discriminate(const Matrix2& x) const;
    std::vector<Label> classify(const Matrix2& x, const DecisionRule& rule = {}) const;

private:
    Architecture arch_;
    std::uint64_t seed_;
    std::vector<DenseNet> generators_;
    DenseNet discriminator_;
    NoisePrior noise_;
};

std::vector<LayerSpec> generator_layers(const Architecture& arch);
std::vector<LayerSpec> discriminator_layers(const Architecture& arch, std::size_t n_generators);

}  // namespace stepgan
