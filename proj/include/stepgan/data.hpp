#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stepgan/label.hpp"
#include "stepgan/matrix.hpp"

namespace stepgan {

struct Dataset {
    Matrix2 features;
    std::vector<Label> labels;
    std::optional<int> subset_id;
    std::vector<std::string> feature_names;

    std::size_t rows() const noexcept { return features.rows(); }
    std::size_t count(Label l) const;
    Dataset select(const std::vector<std::size_t>& rows) const;
    // Feature rows carrying label `l`.
    Matrix2 rows_with(Label l) const;
};

// Event marker -> binary label table. Markers are either the scenario numbers
// of the power-system data (1..41) or textual markers ("Natural", "Attack").
class MarkerMap {
public:
    static MarkerMap builtin();
    static MarkerMap load(const std::filesystem::path& path);

    int version() const noexcept { return version_; }
    Label lookup(std::string_view marker) const;  // throws DataError on unknown markers
    void set(std::string marker, Label l) { entries_[std::move(marker)] = l; }

private:
    int version_ = 1;
    std::map<std::string, Label, std::less<>> entries_;
};

struct CsvSchema {
    std::size_t feature_count = 128;  // 0 accepts any width
    std::string marker_column = "marker";
    MarkerMap markers = MarkerMap::builtin();
};

// Parses a header row plus numeric feature columns and a trailing marker
// column. Non-finite tokens (inf, nan) are kept for clean_and_scale to impute.
// Errors name the file and line.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

// Writes the same schema back; markers are written as "normal"/"attack" and
// values in shortest round-trip form.
void write_csv(const std::filesystem::path& path, const Dataset& data);

// Per-feature median imputation followed by min-max scaling to [-1, 1], with
// statistics taken from training-normal rows only.
struct Scaler {
    std::vector<double> min;
    std::vector<double> max;
    std::vector<double> median;  // of finite training values, for imputation

    static constexpr double kClip = 1.5;

    static Scaler fit(const Matrix2& train_normal);

    std::size_t features() const noexcept { return min.size(); }
    // Imputes non-finite entries, scales, and clips to [-kClip, kClip].
    Matrix2 transform(const Matrix2& raw) const;
    // Inverse of the scaling step (no clipping, no imputation).
    Matrix2 inverse(const Matrix2& scaled) const;

    friend bool operator==(const Scaler&, const Scaler&) = default;
};

// Fits a scaler on the normal rows of `data` (or reuses `scaler`) and
// returns the cleaned, scaled dataset with it.
std::pair<Dataset, Scaler> clean_and_scale(const Dataset& data, const Scaler* scaler = nullptr);

struct FoldSplit {
    std::size_t fold_index = 1;  // 1-based
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    std::uint64_t seed = 0;
};

// Stratified k-fold: each test fold holds ~1/k of each class; each train set
// is every normal row outside its fold.
std::vector<FoldSplit> kfold_split(const Dataset& data, std::size_t k, std::uint64_t seed);

// Class-stratified sample without replacement, original row order kept.
Dataset downsample(const Dataset& data, double fraction, std::uint64_t seed);

// Normal-only feature rows handed to the trainer. There is no route back to labels.
class TrainView {
public:
    explicit TrainView(Matrix2 features);
    static TrainView from_split(const Dataset& data, const FoldSplit& split);
    static TrainView normals_of(const Dataset& data);

    const Matrix2& features() const noexcept { return features_; }
    std::size_t rows() const noexcept { return features_.rows(); }

private:
    Matrix2 features_;
};

struct EvalView {
    Matrix2 features;
    std::vector<Label> labels;

    static EvalView from_split(const Dataset& data, const FoldSplit& split);
};

// ---------------------------------------------------------------------------
// Synthetic 2-D distributions inside [-1, 1]^2.

enum class SynthKind { GaussianRing8, TwoMoons, SingleBlob };
enum class AnomalyKind { UniformBox, ShiftedModes };

std::string_view to_string(SynthKind k);
std::string_view to_string(AnomalyKind k);
SynthKind synth_kind_from_string(std::string_view s);
AnomalyKind anomaly_kind_from_string(std::string_view s);

struct SynthSpec {
    SynthKind kind = SynthKind::GaussianRing8;
    std::size_t n_normal = 2000;
    AnomalyKind anomaly_kind = AnomalyKind::UniformBox;
    std::size_t n_anomaly = 2000;
    std::uint64_t seed = 0;
};

using Point2 = std::array<double, 2>;

struct SynthData {
    Dataset normal;
    Dataset anomalies;
    std::vector<Point2> mode_centers;
    double sigma = 0.05;
};

inline constexpr double kRingRadius = 0.7;
inline constexpr double kRingSigma = 0.05;

SynthData synth_make(const SynthSpec& spec);

// Normals followed by anomalies as one labelled dataset.
Dataset combine(const Dataset& normal, const Dataset& anomalies);

}  // namespace stepgan
