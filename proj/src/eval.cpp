#include "stepgan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stepgan/error.hpp"

namespace stepgan {

ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> labels) {
    if (predictions.size() != labels.size()) throw ShapeError("confusion: predictions and labels differ in length");
    if (labels.empty()) throw DataError("confusion: empty input");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool pred_normal = predictions[i] == Label::Normal;
        if (labels[i] == Label::Normal) (pred_normal ? cm.tp : cm.fn)++;
        else (pred_normal ? cm.fp : cm.tn)++;
    }
    return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw DataError("metrics: empty confusion matrix");
    MetricsReport m;
    m.cm = cm;
    const auto d = [](std::size_t v) { return static_cast<double>(v); };
    m.accuracy = d(cm.tp + cm.tn) / d(cm.total());
    const std::size_t f_den = 2 * cm.tp + cm.fn + cm.fp;
    m.f_measure = f_den == 0 ? 1.0 : d(2 * cm.tp) / d(f_den);
    m.sensitivity = cm.tp + cm.fn == 0 ? 1.0 : d(cm.tp) / d(cm.tp + cm.fn);
    m.specificity = cm.tn + cm.fp == 0 ? 1.0 : d(cm.tn) / d(cm.tn + cm.fp);
    return m;
}

// ---------------------------------------------------------------------------

BoundingBox BoundingBox::enclosing(const Matrix2& a, const Matrix2& b) {
    BoundingBox box{INFINITY, -INFINITY, INFINITY, -INFINITY};
    for (const Matrix2* m : {&a, &b}) {
        if (m->rows() > 0 && m->cols() != 2) throw ShapeError("BoundingBox: expected 2-D points");
        for (std::size_t r = 0; r < m->rows(); ++r) {
            box.x_min = std::min(box.x_min, (*m)(r, 0));
            box.x_max = std::max(box.x_max, (*m)(r, 0));
            box.y_min = std::min(box.y_min, (*m)(r, 1));
            box.y_max = std::max(box.y_max, (*m)(r, 1));
        }
    }
    return box;
}

namespace {

std::vector<bool> occupied_cells(const Matrix2& pts, std::size_t res, const BoundingBox& box) {
    std::vector<bool> occ(res * res, false);
    const double w = box.x_max - box.x_min, h = box.y_max - box.y_min;
    for (std::size_t r = 0; r < pts.rows(); ++r) {
        const double x = pts(r, 0), y = pts(r, 1);
        if (!(x >= box.x_min && x <= box.x_max && y >= box.y_min && y <= box.y_max)) continue;
        auto cell = [res](double t) {
            return std::min(res - 1, static_cast<std::size_t>(t * static_cast<double>(res)));
        };
        occ[cell((y - box.y_min) / h) * res + cell((x - box.x_min) / w)] = true;
    }
    return occ;
}

}  // namespace

CoverageReport mode_coverage(const Matrix2& generated, const Matrix2& normal, std::size_t grid_resolution,
                             const BoundingBox& box, std::span<const Point2> mode_centers) {
    if (grid_resolution == 0) throw ConfigError("mode_coverage: grid resolution must be >= 1");
    if ((generated.rows() > 0 && generated.cols() != 2) || (normal.rows() > 0 && normal.cols() != 2)) {
        throw ShapeError("mode_coverage: expects 2-D points");
    }
    if (!(box.x_max > box.x_min) || !(box.y_max > box.y_min)) {
        throw DataError("mode_coverage: degenerate bounding box");
    }
    const auto normal_cells = occupied_cells(normal, grid_resolution, box);
    const auto gen_cells = occupied_cells(generated, grid_resolution, box);
    CoverageReport rep;
    rep.grid_resolution = grid_resolution;
    for (std::size_t c = 0; c < normal_cells.size(); ++c) {
        if (normal_cells[c]) continue;
        ++rep.complementary_cells;
        if (gen_cells[c]) ++rep.covered_cells;
    }
    rep.coverage_ratio = rep.complementary_cells == 0
                             ? 0.0
                             : static_cast<double>(rep.covered_cells) / static_cast<double>(rep.complementary_cells);
    for (const auto& m : mode_centers) {
        double best = INFINITY;
        for (std::size_t r = 0; r < generated.rows(); ++r) {
            best = std::min(best, std::hypot(generated(r, 0) - m[0], generated(r, 1) - m[1]));
        }
        rep.mode_nearest_distance.push_back(best);
    }
    return rep;
}

// ---------------------------------------------------------------------------

namespace {

// Cyclic Jacobi rotations on a symmetric matrix; on return `a` is diagonal
// (eigenvalues) and the columns of `v` are the eigenvectors.
void jacobi_eigen(Matrix2& a, Matrix2& v) {
    const std::size_t n = a.rows();
    v = Matrix2::identity(n);
    double scale = 0.0;
    for (double x : a.values()) scale += x * x;
    if (scale == 0.0) return;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off <= 1e-30 * scale) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
}

}  // namespace

Projection pca_project(const Matrix2& data) {
    if (data.rows() <= 2) throw DataError("pca_project: need more than two rows");
    data.require_finite("pca_project input");
    const std::size_t n = data.rows(), d = data.cols();
    Projection out;
    out.mean.assign(d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) out.mean[c] += data(r, c);
    for (double& m : out.mean) m /= static_cast<double>(n);

    Matrix2 centred(n, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) centred(r, c) = data(r, c) - out.mean[c];
    Matrix2 cov;
    matmul_at_b(centred, centred, cov, false);
    for (double& x : cov.values()) x /= static_cast<double>(n - 1);
    double trace = 0.0;
    for (std::size_t c = 0; c < d; ++c) trace += cov(c, c);

    out.points = Matrix2(n, 2);
    out.components.assign(2 * d, 0.0);
    if (!(trace > 1e-300)) {
        out.degenerate = true;
        return out;
    }

    Matrix2 vecs;
    jacobi_eigen(cov, vecs);
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cov(a, a) > cov(b, b); });

    for (std::size_t k = 0; k < 2 && k < d; ++k) {
        const std::size_t col = order[k];
        std::size_t big = 0;
        for (std::size_t c = 1; c < d; ++c) {
            if (std::abs(vecs(c, col)) > std::abs(vecs(big, col))) big = c;
        }
        const double sign = vecs(big, col) < 0.0 ? -1.0 : 1.0;
        for (std::size_t c = 0; c < d; ++c) out.components[k * d + c] = sign * vecs(c, col);
        out.variance[k] = std::max(0.0, cov(col, col));
    }
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t k = 0; k < 2; ++k) {
            double acc = 0.0;
            for (std::size_t c = 0; c < d; ++c) acc += centred(r, c) * out.components[k * d + c];
            out.points(r, k) = acc;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

std::size_t convergence_report(std::span<const double> acc, double target_fraction) {
    constexpr std::size_t kPlateau = 10;
    if (acc.size() < kPlateau) throw DataError("convergence_report: need at least 10 epochs");
    const double plateau =
        std::accumulate(acc.end() - kPlateau, acc.end(), 0.0) / static_cast<double>(kPlateau);
    const double target = target_fraction * plateau;
    for (std::size_t e = 0; e < acc.size(); ++e) {
        if (acc[e] >= target) return e + 1;
    }
    return acc.size();
}

std::size_t convergence_report(std::span<const EpochStats> stats, double target_fraction) {
    std::vector<double> acc;
    acc.reserve(stats.size());
    for (const auto& s : stats) {
        if (!s.accuracy) throw DataError("convergence_report: epoch without an accuracy record");
        acc.push_back(*s.accuracy);
    }
    return convergence_report(acc, target_fraction);
}

MetricsReport evaluate_rows(const GanModel& model, const Matrix2& features, std::span<const Label> labels,
                            const Scaler* scaler, const DecisionRule& rule) {
    const Matrix2 x = scaler != nullptr ? scaler->transform(features) : features;
    if (x.cols() != model.architecture().data_dim) {
        throw ShapeError("evaluation data has " + std::to_string(x.cols()) + " features, model expects " +
                         std::to_string(model.architecture().data_dim));
    }
    const auto predictions = model.classify(x, rule);
    return metrics(confusion(predictions, labels));
}

}  // namespace stepgan
