#pragma once

// Gated multi-generator training. The discriminator always trains; the
// generators only step while the discriminator's sensitivity on real data and
// specificity on generated data both clear their thresholds. When either one
// falls short, generator updates pause until the discriminator recovers.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "stepgan/data.hpp"
#include "stepgan/gan_model.hpp"
#include "stepgan/rng.hpp"

namespace stepgan {

enum class GeneratorLoss {
    NonSaturating,  // -log D_real(G(z))
    Literal,        //  log(1 - D_real(G(z)))
};

enum class GateSemantics {
    BothExceed,        // open iff SE > alpha and SP > beta
    AlgorithmLiteral,  // open unless SE < alpha and SP < beta (printed loop condition)
};

std::string_view to_string(GeneratorLoss v);
std::string_view to_string(GateSemantics v);
GeneratorLoss generator_loss_from_string(std::string_view s);
GateSemantics gate_semantics_from_string(std::string_view s);

struct TrainConfig {
    std::size_t n_generators = 5;
    double alpha = 0.9;  // sensitivity threshold; 0 disables the check
    double beta = 0.9;   // specificity threshold; 0 disables the check
    double lr_discriminator = 2e-4;
    double lr_generators = 2e-4;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 300;
    std::size_t inner_disc_cap = 200;
    std::size_t monitor_batch = 256;
    GeneratorLoss generator_loss = GeneratorLoss::NonSaturating;
    GateSemantics gate_semantics = GateSemantics::BothExceed;
    std::uint64_t seed = 0;
    // Stop once SE, SP and the discriminator loss all move by less than the
    // tolerance for this many consecutive epochs. 0 disables early stopping.
    std::size_t early_stop_patience = 20;
    double early_stop_tolerance = 1e-4;
};

void validate(const TrainConfig& config);

bool gate_allows(double se, double sp, const TrainConfig& config);

struct GateState {
    double last_se = 0.0;
    double last_sp = 0.0;
    bool generators_enabled = false;
    std::size_t disc_only_steps_this_epoch = 0;
};

struct EpochStats {
    std::size_t epoch = 0;
    double disc_loss = 0.0;
    std::vector<double> generator_losses;  // empty when no generator stepped
    double se = 0.0;
    double sp = 0.0;
    std::size_t disc_steps = 0;
    std::size_t gen_steps = 0;
    double wall_time_s = 0.0;
    std::optional<double> accuracy;  // attached by an evaluation observer
};

class Trainer {
public:
    Trainer(GanModel& model, TrainConfig config);

    const TrainConfig& config() const noexcept { return config_; }
    const GateState& gate() const noexcept { return gate_; }
    GanModel& model() noexcept { return model_; }

    // One Adam step of the discriminator on real rows (target: real class)
    // plus batch_size rows from each generator (target: that generator's class).
    double discriminator_step(const Matrix2& real_batch);

    // One Adam step of generator i against the current discriminator. Throws
    // StateError while the gate is closed.
    double generator_step(std::size_t generator_index);

    // Evaluates the generator loss for generator i on a given noise batch
    // without updating anything.
    double generator_loss(std::size_t generator_index, const Matrix2& z) const;
    // Like generator_step but on a caller-supplied noise batch.
    double generator_step_on(std::size_t generator_index, const Matrix2& z);

    // SE: fraction of monitor_real rows put in the real class.
    // SP: fraction of freshly generated rows (monitor_batch per generator) put elsewhere.
    std::pair<double, double> compute_se_sp(const Matrix2& monitor_real);

    // Samples a monitoring batch from the training rows, recomputes SE/SP and
    // updates the gate.
    void refresh_gate(const TrainView& data);

    EpochStats train_epoch(const TrainView& data);

private:
    Matrix2 sample_real(const TrainView& data, std::size_t rows, RandomStream& stream) const;

    GanModel& model_;
    TrainConfig config_;
    GateState gate_;
    RandomStream shuffle_;
    RandomStream monitor_;
    std::size_t epoch_ = 0;
    bool gate_initialized_ = false;
};

// Returns the evaluation accuracy to attach to the epoch, if any.
using EpochObserver = std::function<std::optional<double>(const GanModel&, const EpochStats&)>;

struct TrainResult {
    std::vector<EpochStats> history;
    bool stopped_early = false;
};

// Full run: up to max_epochs epochs with plateau-based early stopping.
// Throws NumericError on a non-finite loss; the model keeps its last finite state.
TrainResult train(GanModel& model, const TrainView& data, const TrainConfig& config,
                  const EpochObserver& observer = {});

}  // namespace stepgan
