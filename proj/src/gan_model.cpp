#include "stepgan/gan_model.hpp"

#include <string>

#include "stepgan/error.hpp"

namespace stepgan {

void validate(const Architecture& arch) {
    if (arch.noise_dim == 0 || arch.data_dim == 0) throw ConfigError("architecture: zero noise or data dimension");
    for (auto w : arch.generator_hidden) {
        if (w == 0) throw ConfigError("architecture: zero generator width");
    }
    for (auto w : arch.discriminator_hidden) {
        if (w == 0) throw ConfigError("architecture: zero discriminator width");
    }
}

NoisePrior::NoisePrior(std::size_t dim, std::uint64_t seed) : dim_(dim), stream_(seed, "noise") {}

Matrix2 NoisePrior::sample(std::size_t batch) {
    Matrix2 z(batch, dim_);
    for (double& v : z.values()) v = stream_.normal();
    return z;
}

DecisionRule DecisionRule::at_threshold(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("decision threshold must lie in (0,1)");
    return {Kind::Threshold, tau};
}

std::size_t argmax_row(std::span<const double> row) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
        if (row[c] > row[best]) best = c;
    }
    return best;
}

std::vector<Label> classify_probabilities(const Matrix2& probabilities, const DecisionRule& rule) {
    if (probabilities.cols() < 2) throw ShapeError("classify: need at least two classes");
    const std::size_t real = probabilities.cols() - 1;
    std::vector<Label> labels(probabilities.rows());
    for (std::size_t r = 0; r < probabilities.rows(); ++r) {
        auto row = probabilities.row(r);
        const bool normal = rule.kind == DecisionRule::Kind::Argmax ? argmax_row(row) == real
                                                                     : row[real] >= rule.threshold;
        labels[r] = normal ? Label::Normal : Label::Attack;
    }
    return labels;
}

std::vector<LayerSpec> generator_layers(const Architecture& arch) {
    std::vector<LayerSpec> layers;
    for (auto w : arch.generator_hidden) layers.push_back({w, Activation::PReLU});
    layers.push_back({arch.data_dim, Activation::Tanh});
    return layers;
}

std::vector<LayerSpec> discriminator_layers(const Architecture& arch, std::size_t n_generators) {
    std::vector<LayerSpec> layers;
    for (auto w : arch.discriminator_hidden) layers.push_back({w, Activation::LeakyReLU});
    layers.push_back({n_generators + 1, Activation::Softmax});
    return layers;
}

GanModel::GanModel(std::size_t n_generators, Architecture arch, std::uint64_t seed)
    : arch_(std::move(arch)), seed_(seed), noise_(arch_.noise_dim, seed) {
    if (n_generators == 0) throw ConfigError("GanModel: at least one generator required");
    validate(arch_);
    const auto gen_layers = generator_layers(arch_);
    generators_.reserve(n_generators);
    for (std::size_t i = 0; i < n_generators; ++i) {
        RandomStream init(seed, "init.generator." + std::to_string(i));
        generators_.emplace_back(arch_.noise_dim, gen_layers, init);
    }
    RandomStream init(seed, "init.discriminator");
    const auto disc_layers = discriminator_layers(arch_, n_generators);
    discriminator_ = DenseNet(arch_.data_dim, disc_layers, init);
}

DenseNet& GanModel::generator(std::size_t i) {
    if (i >= generators_.size()) {
        throw StateError("generator index " + std::to_string(i) + " out of range (n = " +
                         std::to_string(generators_.size()) + ")");
    }
    return generators_[i];
}

const DenseNet& GanModel::generator(std::size_t i) const {
    return const_cast<GanModel*>(this)->generator(i);
}

Matrix2 GanModel::generate(std::size_t generator_index, const Matrix2& z) const {
    return generator(generator_index).infer(z);
}

Matrix2 GanModel::discriminate(const Matrix2& x) const { return discriminator_.infer(x); }

std::vector<Label> GanModel::classify(const Matrix2& x, const DecisionRule& rule) const {
    return classify_probabilities(discriminate(x), rule);
}

}  // namespace stepgan
