#include "stepgan/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "stepgan/error.hpp"

namespace stepgan {

std::string_view to_string(GeneratorLoss v) {
    return v == GeneratorLoss::NonSaturating ? "non_saturating" : "literal";
}

std::string_view to_string(GateSemantics v) {
    return v == GateSemantics::BothExceed ? "both_exceed" : "algorithm_literal";
}

GeneratorLoss generator_loss_from_string(std::string_view s) {
    if (s == "non_saturating") return GeneratorLoss::NonSaturating;
    if (s == "literal") return GeneratorLoss::Literal;
    throw ConfigError("unknown generator loss variant '" + std::string(s) + "'");
}

GateSemantics gate_semantics_from_string(std::string_view s) {
    if (s == "both_exceed") return GateSemantics::BothExceed;
    if (s == "algorithm_literal") return GateSemantics::AlgorithmLiteral;
    throw ConfigError("unknown gate semantics '" + std::string(s) + "'");
}

void validate(const TrainConfig& c) {
    if (c.n_generators == 0) throw ConfigError("n_generators must be >= 1");
    if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    if (!(c.beta >= 0.0 && c.beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
    if (!(c.lr_discriminator > 0.0) || !(c.lr_generators > 0.0)) {
        throw ConfigError("learning rates must be positive");
    }
    if (c.batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (c.max_epochs == 0) throw ConfigError("max_epochs must be >= 1");
    if (c.inner_disc_cap == 0) throw ConfigError("inner_disc_cap must be >= 1");
    if (c.monitor_batch == 0) throw ConfigError("monitor_batch must be >= 1");
    if (!(c.early_stop_tolerance >= 0.0)) throw ConfigError("early_stop_tolerance must be >= 0");
}

bool gate_allows(double se, double sp, const TrainConfig& c) {
    // A zero threshold switches its check off entirely.
    const bool se_ok = c.alpha <= 0.0 || se > c.alpha;
    const bool sp_ok = c.beta <= 0.0 || sp > c.beta;
    if (c.gate_semantics == GateSemantics::BothExceed) return se_ok && sp_ok;
    const bool se_low = c.alpha > 0.0 && se < c.alpha;
    const bool sp_low = c.beta > 0.0 && sp < c.beta;
    return !(se_low && sp_low);
}

Trainer::Trainer(GanModel& model, TrainConfig config)
    : model_(model),
      config_(std::move(config)),
      shuffle_(config_.seed, "trainer.shuffle"),
      monitor_(config_.seed, "trainer.monitor") {
    validate(config_);
    if (config_.n_generators != model_.n_generators()) {
        throw ConfigError("TrainConfig.n_generators does not match the model");
    }
}

double Trainer::discriminator_step(const Matrix2& real_batch) {
    if (real_batch.rows() == 0) throw DataError("discriminator_step: empty real batch");
    const std::size_t n = model_.n_generators();
    Matrix2 combined = real_batch;
    std::vector<std::size_t> targets(real_batch.rows(), model_.real_class());
    for (std::size_t i = 0; i < n; ++i) {
        Matrix2 fake = model_.generate(i, model_.sample_noise(config_.batch_size));
        combined.append_rows(fake);
        targets.insert(targets.end(), fake.rows(), i);
    }
    auto& disc = model_.discriminator();
    disc.forward(combined);
    LossGrad lg = softmax_cross_entropy(disc.logits(), targets);
    if (!std::isfinite(lg.loss)) throw NumericError("discriminator loss is not finite");
    disc.zero_grad();
    disc.backward_from_logits(lg.logit_grads);
    disc.adam_step(config_.lr_discriminator);
    return lg.loss;
}

namespace {

// Loss and d(loss)/d(logits) for the generator objective on D's real-class output.
LossGrad generator_objective(const Matrix2& logits, std::size_t real, GeneratorLoss variant) {
    const std::size_t rows = logits.rows();
    if (variant == GeneratorLoss::NonSaturating) {
        std::vector<std::size_t> targets(rows, real);
        return softmax_cross_entropy(logits, targets);
    }
    // log(1 - q) with q = softmax(logits)[real], evaluated as
    // logsumexp(other classes) - logsumexp(all classes).
    LossGrad lg{0.0, Matrix2(rows, logits.cols())};
    const double inv_rows = 1.0 / static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        auto z = logits.row(r);
        auto g = lg.logit_grads.row(r);
        const double mx = *std::max_element(z.begin(), z.end());
        double all = 0.0, others = 0.0;
        for (std::size_t c = 0; c < z.size(); ++c) {
            const double e = std::exp(z[c] - mx);
            all += e;
            if (c != real) others += e;
        }
        const double q = std::exp(z[real] - mx) / all;
        lg.loss += std::log(others) - std::log(all);
        for (std::size_t c = 0; c < z.size(); ++c) {
            // d/dz_c log(1-q) = -q for c = real, q * p_c / (1-q) otherwise.
            g[c] = (c == real ? -q : q * std::exp(z[c] - mx) / others) * inv_rows;
        }
    }
    lg.loss *= inv_rows;
    return lg;
}

}  // namespace

double Trainer::generator_loss(std::size_t generator_index, const Matrix2& z) const {
    const Matrix2 logits = model_.discriminator().infer_logits(model_.generate(generator_index, z));
    return generator_objective(logits, model_.real_class(), config_.generator_loss).loss;
}

double Trainer::generator_step(std::size_t generator_index) {
    if (!gate_.generators_enabled) {
        throw StateError("generator_step called while the training gate is closed");
    }
    model_.generator(generator_index);  // range check before drawing noise
    return generator_step_on(generator_index, model_.sample_noise(config_.batch_size));
}

double Trainer::generator_step_on(std::size_t generator_index, const Matrix2& z) {
    if (!gate_.generators_enabled) {
        throw StateError("generator_step called while the training gate is closed");
    }
    auto& gen = model_.generator(generator_index);
    auto& disc = model_.discriminator();
    const Matrix2& fake = gen.forward(z);
    disc.forward(fake);
    LossGrad lg = generator_objective(disc.logits(), model_.real_class(), config_.generator_loss);
    if (!std::isfinite(lg.loss)) throw NumericError("generator loss is not finite");
    // The discriminator only routes the gradient; its grad buffers stay untouched.
    Matrix2 fake_grad = disc.backward_from_logits(lg.logit_grads, GradMode::InputOnly);
    gen.zero_grad();
    gen.backward(fake_grad);
    gen.adam_step(config_.lr_generators);
    return lg.loss;
}

std::pair<double, double> Trainer::compute_se_sp(const Matrix2& monitor_real) {
    if (monitor_real.rows() == 0) throw DataError("compute_se_sp: empty monitoring set");
    const std::size_t real = model_.real_class();
    std::size_t real_hits = 0;
    const Matrix2 pr = model_.discriminate(monitor_real);
    for (std::size_t r = 0; r < pr.rows(); ++r) real_hits += argmax_row(pr.row(r)) == real;
    std::size_t fake_rejected = 0, fake_total = 0;
    for (std::size_t i = 0; i < model_.n_generators(); ++i) {
        const Matrix2 pf = model_.discriminate(model_.generate(i, model_.sample_noise(config_.monitor_batch)));
        for (std::size_t r = 0; r < pf.rows(); ++r) fake_rejected += argmax_row(pf.row(r)) != real;
        fake_total += pf.rows();
    }
    return {static_cast<double>(real_hits) / static_cast<double>(pr.rows()),
            static_cast<double>(fake_rejected) / static_cast<double>(fake_total)};
}

Matrix2 Trainer::sample_real(const TrainView& data, std::size_t rows, RandomStream& stream) const {
    const auto idx = stream.sample_without_replacement(data.rows(), std::min(rows, data.rows()));
    return data.features().select_rows(idx);
}

void Trainer::refresh_gate(const TrainView& data) {
    const auto [se, sp] = compute_se_sp(sample_real(data, config_.monitor_batch, monitor_));
    gate_.last_se = se;
    gate_.last_sp = sp;
    gate_.generators_enabled = gate_allows(se, sp, config_);
    gate_initialized_ = true;
}

EpochStats Trainer::train_epoch(const TrainView& data) {
    if (data.rows() == 0) throw DataError("train_epoch: no training rows");
    const auto start = std::chrono::steady_clock::now();
    if (!gate_initialized_) refresh_gate(data);

    EpochStats stats;
    stats.epoch = ++epoch_;
    gate_.disc_only_steps_this_epoch = 0;
    double disc_loss_sum = 0.0;
    std::vector<double> gen_loss_sum(model_.n_generators(), 0.0);
    std::size_t gen_rounds = 0;

    // Discriminator-only phase: train until the gate opens or the cap is hit.
    while (!gate_.generators_enabled && gate_.disc_only_steps_this_epoch < config_.inner_disc_cap) {
        disc_loss_sum += discriminator_step(sample_real(data, config_.batch_size, shuffle_));
        ++stats.disc_steps;
        ++gate_.disc_only_steps_this_epoch;
        refresh_gate(data);
    }

    // One pass over the shuffled training rows, generators stepping whenever
    // the gate is open.
    const auto order = shuffle_.permutation(data.rows());
    for (std::size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
        const std::size_t end = std::min(order.size(), begin + config_.batch_size);
        const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));
        disc_loss_sum += discriminator_step(data.features().select_rows(idx));
        ++stats.disc_steps;
        if (gate_.generators_enabled) {
            for (std::size_t i = 0; i < model_.n_generators(); ++i) {
                gen_loss_sum[i] += generator_step(i);
                ++stats.gen_steps;
            }
            ++gen_rounds;
        }
        refresh_gate(data);
    }

    stats.disc_loss = disc_loss_sum / static_cast<double>(stats.disc_steps);
    if (gen_rounds > 0) {
        for (double s : gen_loss_sum) stats.generator_losses.push_back(s / static_cast<double>(gen_rounds));
    }
    stats.se = gate_.last_se;
    stats.sp = gate_.last_sp;
    stats.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return stats;
}

TrainResult train(GanModel& model, const TrainView& data, const TrainConfig& config,
                  const EpochObserver& observer) {
    Trainer trainer(model, config);
    TrainResult result;
    std::size_t plateau = 0;
    for (std::size_t e = 0; e < config.max_epochs; ++e) {
        EpochStats stats = trainer.train_epoch(data);
        if (observer) stats.accuracy = observer(model, stats);
        if (!result.history.empty() && config.early_stop_patience > 0) {
            const auto& prev = result.history.back();
            const double tol = config.early_stop_tolerance;
            const bool flat = std::abs(stats.se - prev.se) < tol && std::abs(stats.sp - prev.sp) < tol &&
                              std::abs(stats.disc_loss - prev.disc_loss) < tol;
            plateau = flat ? plateau + 1 : 0;
        }
        result.history.push_back(std::move(stats));
        if (config.early_stop_patience > 0 && plateau >= config.early_stop_patience) {
            result.stopped_early = true;
            break;
        }
    }
    return result;
}

}  // namespace stepgan
