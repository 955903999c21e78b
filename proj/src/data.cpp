#include "cen/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace cen {

std::optional<std::size_t> Schema::find(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == name) return i;
    }
    return std::nullopt;
}

namespace {

// RFC-4180 record reader: quoted fields, embedded commas/newlines, CRLF.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false, any = false;
    int ch;
    while ((ch = in.get()) != EOF) {
        any = true;
        char c = static_cast<char>(ch);
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            // swallow; newline handling below
        } else if (c == '\n') {
            fields.push_back(std::move(field));
            return true;
        } else {
            field.push_back(c);
        }
    }
    if (any) {
        fields.push_back(std::move(field));
        return true;
    }
    return false;
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA" || s == "na" || s == "?"; }

}  // namespace

TabularDataset load_csv(const std::string& path, const Schema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("load_csv: cannot open " + path);

    std::vector<std::string> header;
    if (!read_record(in, header)) throw IngestionError("load_csv: missing header row");
    if (header.size() != schema.columns.size()) {
        throw IngestionError("load_csv: header has " + std::to_string(header.size()) +
                             " columns, schema expects " +
                             std::to_string(schema.columns.size()));
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] != schema.columns[i].name) {
            throw IngestionError("load_csv: header column '" + header[i] +
                                 "' does not match schema '" + schema.columns[i].name + "'");
        }
    }

    TabularDataset ds;
    ds.schema = schema;
    std::vector<std::string> fields;
    std::size_t row_index = 0;
    while (read_record(in, fields)) {
        ++row_index;
        if (fields.size() == 1 && fields[0].empty()) continue;  // trailing blank line
        if (fields.size() != schema.columns.size()) {
            throw IngestionError("load_csv: ragged row " + std::to_string(row_index));
        }
        std::vector<Cell> row(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            Cell& cell = row[i];
            const auto kind = schema.columns[i].kind;
            if (is_missing(fields[i])) {
                cell.missing = true;
                continue;
            }
            if (kind == ColumnKind::Categorical || kind == ColumnKind::Label) {
                cell.text = fields[i];
            } else {
                try {
                    std::size_t used = 0;
                    cell.number = std::stod(fields[i], &used);
                    if (used != fields[i].size()) throw std::invalid_argument("trailing");
                } catch (const std::exception&) {
                    throw IngestionError("load_csv: unparseable numeric '" + fields[i] +
                                         "' at row " + std::to_string(row_index) + " column " +
                                         schema.columns[i].name);
                }
            }
        }
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

namespace {

void encode_columns(const TabularDataset& ds, const std::vector<std::string>& names,
                    const PreprocessPlan& plan, std::vector<Vector>& out,
                    std::size_t* unseen_counter) {
    std::vector<std::size_t> cols;
    for (const auto& name : names) {
        auto idx = ds.schema.find(name);
        if (!idx) throw IngestionError("preprocess: unknown column " + name);
        cols.push_back(*idx);
    }
    out.assign(ds.num_rows(), {});
    for (std::size_t r = 0; r < ds.num_rows(); ++r) {
        Vector& v = out[r];
        for (std::size_t ci : cols) {
            const Cell& cell = ds.rows[r][ci];
            const auto kind = ds.schema.columns[ci].kind;
            if (kind == ColumnKind::Categorical) {
                const auto& levels = plan.onehot.at(ci);
                const std::size_t base = v.size();
                v.resize(base + levels.size(), 0.0);
                if (!cell.missing) {
                    auto it = levels.find(cell.text);
                    if (it != levels.end()) {
                        v[base + it->second] = 1.0;
                    } else if (unseen_counter) {
                        ++*unseen_counter;  // unseen level: all-zeros
                    }
                }
            } else {
                // numeric-like columns: standardize then fill NA with the sentinel
                if (cell.missing) {
                    v.push_back(plan.na_fill);
                } else {
                    auto it = plan.standardize.find(ci);
                    if (it != plan.standardize.end()) {
                        v.push_back((cell.number - it->second.first) / it->second.second);
                    } else {
                        v.push_back(cell.number);
                    }
                }
            }
        }
    }
}

}  // namespace

ProcessedData apply_plan(const TabularDataset& ds, const PreprocessRequest& req,
                         PreprocessPlan plan) {
    ProcessedData out;
    encode_columns(ds, req.context_columns, plan, out.contexts, &plan.unseen_level_count);
    encode_columns(ds, req.attr_columns, plan, out.attrs, &plan.unseen_level_count);
    for (std::size_t ci = 0; ci < ds.schema.columns.size(); ++ci) {
        const auto kind = ds.schema.columns[ci].kind;
        if (kind == ColumnKind::Label) {
            for (std::size_t r = 0; r < ds.num_rows(); ++r) {
                const Cell& cell = ds.rows[r][ci];
                if (cell.missing) throw IngestionError("preprocess: missing label at row " +
                                                       std::to_string(r + 1));
                auto it = plan.label_map.find(cell.text);
                if (it == plan.label_map.end()) {
                    throw IngestionError("preprocess: unseen label '" + cell.text + "'");
                }
                out.labels.push_back(it->second);
            }
        } else if (kind == ColumnKind::EventTime) {
            for (std::size_t r = 0; r < ds.num_rows(); ++r) {
                out.event_times.push_back(ds.rows[r][ci].missing ? -1.0 : ds.rows[r][ci].number);
            }
        } else if (kind == ColumnKind::CensorFlag) {
            for (std::size_t r = 0; r < ds.num_rows(); ++r) {
                out.censor_flags.push_back(ds.rows[r][ci].missing ? 0.0 : ds.rows[r][ci].number);
            }
        }
    }
    out.plan = std::move(plan);
    return out;
}

ProcessedData preprocess(const TabularDataset& ds, const PreprocessRequest& req,
                         const std::vector<std::size_t>& train_rows) {
    if (train_rows.empty()) throw InvalidInput("preprocess: empty training split");
    PreprocessPlan plan;
    for (std::size_t ci = 0; ci < ds.schema.columns.size(); ++ci) {
        const auto kind = ds.schema.columns[ci].kind;
        if (kind == ColumnKind::Numeric) {
            double mean = 0.0;
            std::size_t n = 0;
            for (std::size_t r : train_rows) {
                if (!ds.rows[r][ci].missing) {
                    mean += ds.rows[r][ci].number;
                    ++n;
                }
            }
            if (n > 0) mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t r : train_rows) {
                if (!ds.rows[r][ci].missing) {
                    const double d = ds.rows[r][ci].number - mean;
                    var += d * d;
                }
            }
            double std_dev = n > 1 ? std::sqrt(var / static_cast<double>(n)) : 0.0;
            if (std_dev < 1e-12) std_dev = 1.0;  // constant column
            plan.standardize[ci] = {mean, std_dev};
        } else if (kind == ColumnKind::Categorical) {
            auto& levels = plan.onehot[ci];
            for (std::size_t r : train_rows) {
                const Cell& cell = ds.rows[r][ci];
                if (!cell.missing && levels.find(cell.text) == levels.end()) {
                    levels.emplace(cell.text, levels.size());
                }
            }
        } else if (kind == ColumnKind::Label) {
            for (std::size_t r : train_rows) {
                const Cell& cell = ds.rows[r][ci];
                if (!cell.missing && plan.label_map.find(cell.text) == plan.label_map.end()) {
                    plan.label_map.emplace(cell.text, plan.label_map.size());
                }
            }
            // make label ids stable across splits: include all rows' levels after train's
            for (std::size_t r = 0; r < ds.num_rows(); ++r) {
                const Cell& cell = ds.rows[r][ci];
                if (!cell.missing && plan.label_map.find(cell.text) == plan.label_map.end()) {
                    plan.label_map.emplace(cell.text, plan.label_map.size());
                }
            }
        }
    }
    return apply_plan(ds, req, std::move(plan));
}

DiscretizeResult discretize_survival(const std::vector<double>& times,
                                     const std::vector<bool>& censored, double horizon,
                                     double width) {
    if (times.size() != censored.size()) throw InvalidInput("discretize_survival: size mismatch");
    if (horizon <= 0.0 || width <= 0.0) throw InvalidInput("discretize_survival: bad horizon/width");
    DiscretizeResult res;
    res.intervals = static_cast<std::size_t>(std::ceil(horizon / width));
    const std::size_t m = res.intervals;
    for (std::size_t j = 0; j <= m; ++j) res.boundaries.push_back(static_cast<double>(j) * width);
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < 0.0) {
            throw InvalidInput("discretize_survival: negative time at index " + std::to_string(i));
        }
        std::size_t j = static_cast<std::size_t>(std::floor(times[i] / width));
        SurvivalTarget t;
        t.censored = censored[i];
        if (j >= m) {
            if (censored[i]) {
                t.interval = m;
            } else {
                // event beyond the horizon cap
                t.interval = m - 1;
                t.censored = false;
                ++res.clamped;
            }
        } else {
            t.interval = j;
        }
        res.targets.push_back(t);
    }
    return res;
}

Batch gen_xor_context(const SyntheticSpec& spec) {
    if (spec.per_context < 2) throw InvalidInput("gen_xor_context: need >= 2 points per context");
    Rng rng(spec.seed);
    const double a = spec.offset;
    // blob centers and labels per context
    struct BlobDef {
        double cx, cy;
        std::size_t label;
    };
    std::vector<std::vector<BlobDef>> contexts;
    if (spec.class_pure) {
        contexts = {{{+a, +a, 1}}, {{-a, -a, 1}}, {{-a, +a, 0}}, {{+a, -a, 0}}};
    } else {
        contexts = {{{+a, +a, 1}, {-a, +a, 0}},
                    {{-a, -a, 1}, {+a, -a, 0}},
                    {{+a, +a, 1}, {+a, -a, 0}},
                    {{-a, -a, 1}, {-a, +a, 0}}};
    }
    Batch b;
    for (std::size_t ctx = 0; ctx < contexts.size(); ++ctx) {
        const auto& blobs = contexts[ctx];
        for (std::size_t i = 0; i < spec.per_context; ++i) {
            const BlobDef& blob = blobs[i % blobs.size()];
            Vector c(4, 0.0);
            c[ctx] = 1.0;
            Vector x{blob.cx + spec.noise * rng.normal(), blob.cy + spec.noise * rng.normal()};
            b.contexts.push_back(std::move(c));
            b.attrs.push_back(std::move(x));
            b.labels.push_back(blob.label);
        }
    }
    return b;
}

Batch gen_blobs(std::size_t n, std::size_t dim, double separation, std::uint64_t seed) {
    if (n == 0 || dim == 0) throw InvalidInput("gen_blobs: zero size");
    Rng rng(seed);
    Batch b;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t label = i % 2;
        const double center = label == 1 ? separation : -separation;
        Vector x(dim);
        for (auto& v : x) v = center + rng.normal();
        b.contexts.push_back(x);
        b.attrs.push_back(std::move(x));
        b.labels.push_back(label);
    }
    return b;
}

std::vector<Vector> inject_noise(const std::vector<Vector>& attrs, double snr, Rng& rng) {
    if (snr <= 0.0) throw InvalidInput("inject_noise: snr must be positive");
    if (attrs.empty()) return {};
    if (std::isinf(snr)) return attrs;
    const std::size_t d = attrs[0].size();
    // per-column variance of the signal
    Vector mean(d, 0.0), var(d, 0.0);
    for (const auto& row : attrs) {
        for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
    }
    for (auto& v : mean) v /= static_cast<double>(attrs.size());
    for (const auto& row : attrs) {
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = row[j] - mean[j];
            var[j] += diff * diff;
        }
    }
    for (auto& v : var) v /= static_cast<double>(attrs.size());

    std::vector<Vector> out = attrs;
    for (auto& row : out) {
        for (std::size_t j = 0; j < d; ++j) {
            row[j] += std::sqrt(var[j] / snr) * rng.normal();
        }
    }
    return out;
}

std::pair<std::vector<Vector>, std::vector<std::size_t>> subsample_features(
    const std::vector<Vector>& attrs, double fraction, Rng& rng) {
    if (fraction <= 0.0 || fraction > 1.0) {
        throw InvalidInput("subsample_features: fraction must be in (0, 1]");
    }
    if (attrs.empty()) return {{}, {}};
    const std::size_t d = attrs[0].size();
    const std::size_t keep = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(d)));
    std::vector<std::size_t> cols(d);
    for (std::size_t i = 0; i < d; ++i) cols[i] = i;
    for (std::size_t i = d; i-- > 1;) std::swap(cols[i], cols[rng.below(i + 1)]);
    cols.resize(keep);
    std::sort(cols.begin(), cols.end());
    std::vector<Vector> out;
    out.reserve(attrs.size());
    for (const auto& row : attrs) {
        Vector r;
        r.reserve(keep);
        for (std::size_t c : cols) r.push_back(row[c]);
        out.push_back(std::move(r));
    }
    return {std::move(out), std::move(cols)};
}

}  // namespace cen
