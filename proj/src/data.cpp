#include "stepgan/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "stepgan/error.hpp"
#include "stepgan/rng.hpp"

namespace stepgan {

std::size_t Dataset::count(Label l) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
}

Dataset Dataset::select(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.features = features.select_rows(rows);
    out.labels.reserve(rows.size());
    for (auto r : rows) out.labels.push_back(labels.at(r));
    out.subset_id = subset_id;
    out.feature_names = feature_names;
    return out;
}

Matrix2 Dataset::rows_with(Label l) const {
    std::vector<std::size_t> idx;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] == l) idx.push_back(r);
    }
    return features.select_rows(idx);
}

// ---------------------------------------------------------------------------

MarkerMap MarkerMap::builtin() {
    MarkerMap m;
    // Scenario numbers of the 37 power-system events: 1-6 and 13-14 are natural
    // events (faults, line maintenance), 41 is no event, the rest are attacks.
    for (int s : {1, 2, 3, 4, 5, 6, 13, 14, 41}) m.set(std::to_string(s), Label::Normal);
    for (int s = 7; s <= 12; ++s) m.set(std::to_string(s), Label::Attack);
    for (int s = 15; s <= 30; ++s) m.set(std::to_string(s), Label::Attack);
    for (int s = 35; s <= 40; ++s) m.set(std::to_string(s), Label::Attack);
    for (const char* t : {"Natural", "NoEvents", "No Events", "normal"}) m.set(t, Label::Normal);
    for (const char* t : {"Attack", "attack"}) m.set(t, Label::Attack);
    return m;
}

MarkerMap MarkerMap::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open marker map " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    MarkerMap m;
    try {
        m.version_ = doc.at("version").get<int>();
        for (const auto& t : doc.at("normal")) m.set(t.get<std::string>(), Label::Normal);
        for (const auto& t : doc.at("attack")) m.set(t.get<std::string>(), Label::Attack);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": malformed marker map: " + e.what());
    }
    return m;
}

Label MarkerMap::lookup(std::string_view marker) const {
    auto it = entries_.find(marker);
    if (it == entries_.end()) throw DataError("unknown marker value '" + std::string(marker) + "'");
    return it->second;
}

// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

bool parse_double(std::string_view tok, double& out) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    if (tok.empty()) return false;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    if (ec == std::errc::result_out_of_range) {
        // Overflowing literals read as infinities and get imputed later.
        out = tok.front() == '-' ? -std::numeric_limits<double>::infinity()
                                 : std::numeric_limits<double>::infinity();
        return true;
    }
    return ec == std::errc() && ptr == tok.data() + tok.size();
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file " + path.string());
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + msg);
    };

    Dataset ds;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (line_no == 0 || trim(line).empty()) fail("empty file, expected a header row");
    const auto header = split_commas(line);
    if (header.size() < 2 || header.back() != schema.marker_column) {
        fail("header must end with a '" + schema.marker_column + "' column");
    }
    const std::size_t n_features = header.size() - 1;
    if (schema.feature_count != 0 && n_features != schema.feature_count) {
        fail("expected " + std::to_string(schema.feature_count) + " feature columns, found " +
             std::to_string(n_features));
    }
    for (std::size_t c = 0; c < n_features; ++c) ds.feature_names.emplace_back(header[c]);

    std::vector<double> values;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_commas(line);
        if (fields.size() != header.size()) {
            fail("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < n_features; ++c) {
            double v = 0.0;
            if (!parse_double(fields[c], v)) {
                fail("non-numeric value '" + std::string(fields[c]) + "' in column '" + ds.feature_names[c] + "'");
            }
            values.push_back(v);
        }
        try {
            ds.labels.push_back(schema.markers.lookup(fields.back()));
        } catch (const DataError& e) {
            fail(e.what());
        }
    }
    ds.features = Matrix2(ds.labels.size(), n_features, std::move(values));
    return ds;
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    const std::size_t cols = data.features.cols();
    for (std::size_t c = 0; c < cols; ++c) {
        out << (c < data.feature_names.size() ? data.feature_names[c] : "f" + std::to_string(c + 1)) << ',';
    }
    out << "marker\n";
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (double v : data.features.row(r)) out << format_double(v) << ',';
        out << to_string(data.labels[r]) << '\n';
    }
    if (!out) throw DataError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------

Scaler Scaler::fit(const Matrix2& train_normal) {
    Scaler s;
    const std::size_t cols = train_normal.cols();
    s.min.assign(cols, 0.0);
    s.max.assign(cols, 0.0);
    s.median.assign(cols, 0.0);
    std::vector<double> finite;
    for (std::size_t c = 0; c < cols; ++c) {
        finite.clear();
        for (std::size_t r = 0; r < train_normal.rows(); ++r) {
            const double v = train_normal(r, c);
            if (std::isfinite(v)) finite.push_back(v);
        }
        if (finite.empty()) throw DataError("feature " + std::to_string(c + 1) + " has no finite training values");
        std::sort(finite.begin(), finite.end());
        const std::size_t m = finite.size();
        s.median[c] = m % 2 == 1 ? finite[m / 2] : 0.5 * (finite[m / 2 - 1] + finite[m / 2]);
        s.min[c] = finite.front();
        s.max[c] = finite.back();
    }
    return s;
}

Matrix2 Scaler::transform(const Matrix2& raw) const {
    if (raw.cols() != features()) {
        throw ShapeError("Scaler: expected " + std::to_string(features()) + " features, got " +
                         std::to_string(raw.cols()));
    }
    Matrix2 out(raw.rows(), raw.cols());
    for (std::size_t r = 0; r < raw.rows(); ++r) {
        for (std::size_t c = 0; c < raw.cols(); ++c) {
            double v = raw(r, c);
            if (!std::isfinite(v)) v = median[c];
            const double span = max[c] - min[c];
            double scaled = span > 0.0 ? 2.0 * (v - min[c]) / span - 1.0 : 0.0;
            out(r, c) = std::clamp(scaled, -kClip, kClip);
        }
    }
    return out;
}

Matrix2 Scaler::inverse(const Matrix2& scaled) const {
    if (scaled.cols() != features()) throw ShapeError("Scaler::inverse: feature count mismatch");
    Matrix2 out(scaled.rows(), scaled.cols());
    for (std::size_t r = 0; r < scaled.rows(); ++r) {
        for (std::size_t c = 0; c < scaled.cols(); ++c) {
            const double span = max[c] - min[c];
            out(r, c) = span > 0.0 ? (scaled(r, c) + 1.0) * 0.5 * span + min[c] : min[c];
        }
    }
    return out;
}

std::pair<Dataset, Scaler> clean_and_scale(const Dataset& data, const Scaler* scaler) {
    Scaler s = scaler != nullptr ? *scaler : Scaler::fit(data.rows_with(Label::Normal));
    Dataset out = data;
    out.features = s.transform(data.features);
    return {std::move(out), std::move(s)};
}

// ---------------------------------------------------------------------------

std::vector<FoldSplit> kfold_split(const Dataset& data, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("kfold_split: k must be >= 2");
    const std::size_t n_normal = data.count(Label::Normal);
    const std::size_t n_attack = data.count(Label::Attack);
    if (n_normal < k) throw DataError("kfold_split: fewer normal rows than folds");
    if (n_attack == 0) throw DataError("kfold_split: dataset has no attack rows");

    std::vector<std::size_t> normals, attacks;
    for (std::size_t r = 0; r < data.rows(); ++r) (data.labels[r] == Label::Normal ? normals : attacks).push_back(r);

    RandomStream rng(seed, "data.kfold");
    // Deal shuffled normals then shuffled attacks round-robin: every fold gets
    // its share of each class and fold sizes differ by at most one.
    std::vector<std::size_t> sequence;
    for (auto p : rng.permutation(normals.size())) sequence.push_back(normals[p]);
    for (auto p : rng.permutation(attacks.size())) sequence.push_back(attacks[p]);

    std::vector<std::size_t> fold_of(data.rows());
    for (std::size_t pos = 0; pos < sequence.size(); ++pos) fold_of[sequence[pos]] = pos % k;

    std::vector<FoldSplit> folds(k);
    for (std::size_t f = 0; f < k; ++f) {
        folds[f].fold_index = f + 1;
        folds[f].seed = seed;
    }
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t f = 0; f < k; ++f) {
            if (fold_of[r] == f) folds[f].test_rows.push_back(r);
            else if (data.labels[r] == Label::Normal) folds[f].train_rows.push_back(r);
        }
    }
    return folds;
}

Dataset downsample(const Dataset& data, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("downsample: fraction must lie in (0, 1]");
    if (fraction == 1.0) return data;
    RandomStream rng(seed, "data.downsample");
    std::vector<std::size_t> keep;
    for (Label l : {Label::Normal, Label::Attack}) {
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < data.rows(); ++r) {
            if (data.labels[r] == l) rows.push_back(r);
        }
        if (rows.empty()) continue;
        const auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows.size())));
        if (take == 0) {
            throw DataError("downsample: fraction " + format_double(fraction) + " leaves no " +
                            std::string(to_string(l)) + " rows");
        }
        for (auto i : rng.sample_without_replacement(rows.size(), take)) keep.push_back(rows[i]);
    }
    std::sort(keep.begin(), keep.end());
    return data.select(keep);
}

// ---------------------------------------------------------------------------

TrainView::TrainView(Matrix2 features) : features_(std::move(features)) {
    if (features_.rows() == 0) throw DataError("TrainView: no training rows");
    features_.require_finite("training features");
}

TrainView TrainView::from_split(const Dataset& data, const FoldSplit& split) {
    for (auto r : split.train_rows) {
        if (data.labels.at(r) != Label::Normal) throw DataError("TrainView: attack row in a training split");
    }
    return TrainView(data.features.select_rows(split.train_rows));
}

TrainView TrainView::normals_of(const Dataset& data) { return TrainView(data.rows_with(Label::Normal)); }

EvalView EvalView::from_split(const Dataset& data, const FoldSplit& split) {
    Dataset d = data.select(split.test_rows);
    return {std::move(d.features), std::move(d.labels)};
}

Dataset combine(const Dataset& normal, const Dataset& anomalies) {
    Dataset out = normal;
    out.features.append_rows(anomalies.features);
    out.labels.insert(out.labels.end(), anomalies.labels.begin(), anomalies.labels.end());
    return out;
}

}  // namespace stepgan
