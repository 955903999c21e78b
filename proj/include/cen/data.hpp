#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cen/cen_model.hpp"
#include "cen/linalg.hpp"
#include "cen/rng.hpp"

namespace cen {

enum class ColumnKind { Numeric, Categorical, EventTime, CensorFlag, Label };

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
};

struct Schema {
    std::vector<ColumnSpec> columns;

    std::optional<std::size_t> find(const std::string& name) const;
};

struct Cell {
    bool missing = false;
    double number = 0.0;       // numeric / event-time / censor-flag
    std::string text;          // categorical / label
};

struct TabularDataset {
    Schema schema;
    std::vector<std::vector<Cell>> rows;

    std::size_t num_rows() const { return rows.size(); }
};

// RFC-4180-style CSV with a header row. Header must match the schema names.
TabularDataset load_csv(const std::string& path, const Schema& schema);

struct PreprocessPlan {
    // per numeric column (by schema index): train-split mean and std
    std::map<std::size_t, std::pair<double, double>> standardize;
    // per categorical column: level -> one-hot slot
    std::map<std::size_t, std::map<std::string, std::size_t>> onehot;
    std::map<std::string, std::size_t> label_map;
    double na_fill = -1.0;
    std::size_t unseen_level_count = 0;  // transform-time warning counter
};

struct PreprocessRequest {
    // schema column names that go into the context (C) and attributes (X);
    // identical lists are allowed.
    std::vector<std::string> context_columns;
    std::vector<std::string> attr_columns;
};

struct ProcessedData {
    std::vector<Vector> contexts;
    std::vector<Vector> attrs;
    std::vector<std::size_t> labels;
    std::vector<double> event_times;
    std::vector<double> censor_flags;
    PreprocessPlan plan;
};

// Fits the plan on `train_rows` and transforms the whole dataset.
// Numeric: standardized by train stats, then NAs filled with -1 (sentinel
// outside the typical standardized range). Categorical: one-hot; unseen
// levels map to all-zeros and bump a warning counter.
ProcessedData preprocess(const TabularDataset& ds, const PreprocessRequest& req,
                         const std::vector<std::size_t>& train_rows);

// Re-applies a fitted plan to another dataset with the same schema.
ProcessedData apply_plan(const TabularDataset& ds, const PreprocessRequest& req,
                         PreprocessPlan plan);

struct Discretized {
    std::vector<SurvivalTarget> targets;
    std::vector<double> boundaries;  // t_0 .. t_m
    std::size_t intervals = 0;       // m
};

// j = floor(t / width) clamped to m = ceil(horizon/width); uncensored events
// past the horizon are clamped to m-1 (the caller is warned via the return's
// clamped counter).
struct DiscretizeResult : Discretized {
    std::size_t clamped = 0;
};

DiscretizeResult discretize_survival(const std::vector<double>& times,
                                     const std::vector<bool>& censored, double horizon,
                                     double width);

struct SyntheticSpec {
    std::size_t per_context = 50;  // points per context
    double offset = 1.0;           // blob center magnitude
    double noise = 0.3;            // blob standard deviation
    bool class_pure = false;       // context alone determines the label
    std::uint64_t seed = 0;
};

// Four contexts (one-hot in C), Gaussian blobs at XOR corners of (X1, X2).
// Mixed variant: every context holds both classes, separable within a context
// but not from pooled X. Class-pure variant: one blob per context, context id
// determines the label, pooled X still forms the XOR pattern.
Batch gen_xor_context(const SyntheticSpec& spec);

// Two Gaussian blobs in d dims, binary labels; context = attributes.
Batch gen_blobs(std::size_t n, std::size_t dim, double separation, std::uint64_t seed);

// X + N(0, var(X)/snr) column-wise. snr = infinity returns X unchanged.
std::vector<Vector> inject_noise(const std::vector<Vector>& attrs, double snr, Rng& rng);

// Keeps ceil(fraction * d) seeded-random columns.
std::pair<std::vector<Vector>, std::vector<std::size_t>> subsample_features(
    const std::vector<Vector>& attrs, double fraction, Rng& rng);

}  // namespace cen
