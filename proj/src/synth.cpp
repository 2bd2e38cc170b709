#include <cmath>
#include <numbers>
#include <string>

#include "stepgan/data.hpp"
#include "stepgan/error.hpp"
#include "stepgan/rng.hpp"

namespace stepgan {

std::string_view to_string(SynthKind k) {
    switch (k) {
        case SynthKind::GaussianRing8: return "gaussian_ring_8";
        case SynthKind::TwoMoons: return "two_moons";
        case SynthKind::SingleBlob: return "single_blob";
    }
    return "unknown";
}

std::string_view to_string(AnomalyKind k) {
    return k == AnomalyKind::UniformBox ? "uniform_box" : "shifted_modes";
}

SynthKind synth_kind_from_string(std::string_view s) {
    for (auto k : {SynthKind::GaussianRing8, SynthKind::TwoMoons, SynthKind::SingleBlob}) {
        if (to_string(k) == s) return k;
    }
    throw ConfigError("unknown synthetic kind '" + std::string(s) + "'");
}

AnomalyKind anomaly_kind_from_string(std::string_view s) {
    for (auto k : {AnomalyKind::UniformBox, AnomalyKind::ShiftedModes}) {
        if (to_string(k) == s) return k;
    }
    throw ConfigError("unknown anomaly kind '" + std::string(s) + "'");
}

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMoonScale = 0.6;
constexpr std::size_t kMoonCentersPerArc = 16;
constexpr double kBlobSigma = 0.15;

bool in_box(const Point2& p) { return std::abs(p[0]) <= 1.0 && std::abs(p[1]) <= 1.0; }

double dist(const Point2& a, const Point2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

bool near_any(const Point2& p, const std::vector<Point2>& centers, double radius) {
    for (const auto& c : centers) {
        if (dist(p, c) <= radius) return true;
    }
    return false;
}

// Raw two-moons arc point, mapped so both arcs sit centred in the box.
Point2 moon_point(int arc, double t) {
    const double x = arc == 0 ? std::cos(t) : 1.0 - std::cos(t);
    const double y = arc == 0 ? std::sin(t) : 0.5 - std::sin(t);
    return {(x - 0.5) * kMoonScale, (y - 0.25) * kMoonScale};
}

std::vector<Point2> mode_centers_for(SynthKind kind) {
    std::vector<Point2> c;
    switch (kind) {
        case SynthKind::GaussianRing8:
            for (int k = 0; k < 8; ++k) {
                const double a = k * kPi / 4.0;
                c.push_back({kRingRadius * std::cos(a), kRingRadius * std::sin(a)});
            }
            break;
        case SynthKind::TwoMoons:
            for (int arc = 0; arc < 2; ++arc) {
                for (std::size_t j = 0; j < kMoonCentersPerArc; ++j) {
                    c.push_back(moon_point(arc, kPi * static_cast<double>(j) / (kMoonCentersPerArc - 1)));
                }
            }
            break;
        case SynthKind::SingleBlob:
            c.push_back({0.0, 0.0});
            break;
    }
    return c;
}

double sigma_for(SynthKind kind) { return kind == SynthKind::SingleBlob ? kBlobSigma : kRingSigma; }

// Gaussian around `center`, resampled until within 3 sigma and inside the box.
Point2 truncated_gaussian(const Point2& center, double sigma, RandomStream& rng) {
    while (true) {
        const Point2 p{center[0] + sigma * rng.normal(), center[1] + sigma * rng.normal()};
        if (dist(p, center) <= 3.0 * sigma && in_box(p)) return p;
    }
}

std::vector<Point2> shifted_centers(SynthKind kind, const std::vector<Point2>& centers) {
    std::vector<Point2> s;
    switch (kind) {
        case SynthKind::GaussianRing8:
            for (int k = 0; k < 8; ++k) {
                const double a = (k + 0.5) * kPi / 4.0;
                s.push_back({kRingRadius * std::cos(a), kRingRadius * std::sin(a)});
            }
            break;
        case SynthKind::TwoMoons:
            for (const auto& c : centers) s.push_back({c[0], c[1] + 0.35});
            break;
        case SynthKind::SingleBlob:
            s = {{0.6, 0.0}, {-0.6, 0.0}, {0.0, 0.6}, {0.0, -0.6}};
            break;
    }
    return s;
}

Dataset make_dataset(const std::vector<Point2>& pts, Label label) {
    Dataset d;
    d.features = Matrix2(pts.size(), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        d.features(i, 0) = pts[i][0];
        d.features(i, 1) = pts[i][1];
    }
    d.labels.assign(pts.size(), label);
    d.feature_names = {"x1", "x2"};
    return d;
}

}  // namespace

SynthData synth_make(const SynthSpec& spec) {
    SynthData out;
    out.mode_centers = mode_centers_for(spec.kind);
    out.sigma = sigma_for(spec.kind);
    RandomStream normal_rng(spec.seed, "synth.normal");
    RandomStream anomaly_rng(spec.seed, "synth.anomaly");

    std::vector<Point2> normal;
    normal.reserve(spec.n_normal);
    for (std::size_t i = 0; i < spec.n_normal; ++i) {
        if (spec.kind == SynthKind::TwoMoons) {
            // Continuous position along a random arc rather than a discrete center.
            const int arc = static_cast<int>(normal_rng.index(2));
            const Point2 c = moon_point(arc, normal_rng.uniform(0.0, kPi));
            normal.push_back(truncated_gaussian(c, out.sigma, normal_rng));
        } else {
            const auto& c = out.mode_centers[normal_rng.index(out.mode_centers.size())];
            normal.push_back(truncated_gaussian(c, out.sigma, normal_rng));
        }
    }

    const double reject = 3.0 * out.sigma;
    const auto shifted = shifted_centers(spec.kind, out.mode_centers);
    std::vector<Point2> anomalies;
    anomalies.reserve(spec.n_anomaly);
    while (anomalies.size() < spec.n_anomaly) {
        Point2 p;
        if (spec.anomaly_kind == AnomalyKind::UniformBox) {
            p = {anomaly_rng.uniform(-1.0, 1.0), anomaly_rng.uniform(-1.0, 1.0)};
        } else {
            const auto& c = shifted[anomaly_rng.index(shifted.size())];
            p = {c[0] + out.sigma * anomaly_rng.normal(), c[1] + out.sigma * anomaly_rng.normal()};
        }
        if (in_box(p) && !near_any(p, out.mode_centers, reject)) anomalies.push_back(p);
    }

    out.normal = make_dataset(normal, Label::Normal);
    out.anomalies = make_dataset(anomalies, Label::Attack);
    return out;
}

}  // namespace stepgan
