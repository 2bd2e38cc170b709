#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stepgan/data.hpp"
#include "stepgan/label.hpp"
#include "stepgan/matrix.hpp"
#include "stepgan/trainer.hpp"

namespace stepgan {

// Positive class = normal.
struct ConfusionMatrix {
    std::size_t tp = 0;  // normal predicted normal
    std::size_t tn = 0;  // attack predicted attack
    std::size_t fp = 0;  // attack predicted normal
    std::size_t fn = 0;  // normal predicted attack

    std::size_t total() const noexcept { return tp + tn + fp + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> labels);

struct MetricsReport {
    ConfusionMatrix cm;
    double accuracy = 0.0;
    double f_measure = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    std::optional<std::size_t> fold_index;
    std::string config_fingerprint;
};

// Accuracy = (TP+TN)/total, F = 2TP/(2TP+FN+FP). F is 1 when TP=FN=FP=0 and
// 0 when TP=0 with errors present. SE = TP/(TP+FN) and SP = TN/(TN+FP) read 1
// when their denominator is empty (nothing to miss).
MetricsReport metrics(const ConfusionMatrix& cm);

struct BoundingBox {
    double x_min = -1.0;
    double x_max = 1.0;
    double y_min = -1.0;
    double y_max = 1.0;

    static BoundingBox unit() { return {}; }
    static BoundingBox enclosing(const Matrix2& a, const Matrix2& b);
};

struct CoverageReport {
    std::size_t grid_resolution = 0;
    std::size_t complementary_cells = 0;
    std::size_t covered_cells = 0;
    double coverage_ratio = 0.0;
    std::vector<double> mode_nearest_distance;  // one per supplied mode center
};

// Splits the box into resolution^2 cells. Complementary cells are those
// holding no normal point; coverage is the fraction of them holding at least
// one generated point. Points outside the box are ignored.
CoverageReport mode_coverage(const Matrix2& generated, const Matrix2& normal, std::size_t grid_resolution,
                             const BoundingBox& box = BoundingBox::unit(),
                             std::span<const Point2> mode_centers = {});

struct Projection {
    Matrix2 points;                   // rows x 2
    std::vector<double> mean;
    std::vector<double> components;   // 2 x dims, row-major
    double variance[2] = {0.0, 0.0};  // along each component
    bool degenerate = false;          // data had (numerically) zero variance
};

// Mean-centred projection on the top two principal directions (cyclic Jacobi
// eigen-solver on the covariance). Each direction's largest-magnitude loading
// is made positive.
Projection pca_project(const Matrix2& data);

// First 1-based epoch whose accuracy reaches target_fraction of the plateau
// (mean of the last 10 epochs).
std::size_t convergence_report(std::span<const double> accuracy_per_epoch, double target_fraction = 0.9);
std::size_t convergence_report(std::span<const EpochStats> stats, double target_fraction = 0.9);

// Runs the discriminator's decision on raw test rows. With a scaler the rows
// are imputed/scaled/clipped first.
MetricsReport evaluate_rows(const GanModel& model, const Matrix2& features, std::span<const Label> labels,
                            const Scaler* scaler, const DecisionRule& rule = {});

}  // namespace stepgan
