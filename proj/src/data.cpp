#include "fairdisc/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "fairdisc/errors.hpp"
#include "fairdisc/hash.hpp"
#include "fairdisc/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "cache format assumes a little-endian host");

namespace fairdisc::data {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> cells;
    if (delim == ' ') {
        // whitespace-delimited sources: collapse runs
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) cells.push_back(tok);
        return cells;
    }
    std::string cur;
    for (char c : line) {
        if (c == delim) {
            cells.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(trim(cur));
    return cells;
}

double parse_double(const std::string& cell, std::size_t line_no, const std::string& column) {
    const std::string t = trim(cell);
    if (t.empty())
        throw DataError("line " + std::to_string(line_no) + ": empty value in numeric column '" +
                        column + "'");
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(v))
        throw DataError("line " + std::to_string(line_no) + ": '" + t +
                        "' is not a number (column '" + column + "')");
    return v;
}

void check_label_map(const std::map<std::string, int>& m, const std::string& what) {
    if (m.empty()) throw ConfigError("schema: " + what + " map is empty");
    std::set<int> values;
    for (const auto& [k, v] : m) {
        if (v < 0) throw ConfigError("schema: " + what + " class for '" + k + "' is negative");
        values.insert(v);
    }
    const int max = *values.rbegin();
    for (int c = 0; c <= max; ++c)
        if (!values.count(c))
            throw ConfigError("schema: " + what + " classes must be contiguous from 0; missing " +
                              std::to_string(c));
    if (max < 1) throw ConfigError("schema: " + what + " needs at least 2 classes");
}

std::size_t map_classes(const std::map<std::string, int>& m) {
    int max = 0;
    for (const auto& [k, v] : m) max = std::max(max, v);
    return std::size_t(max) + 1;
}

int map_label(const std::map<std::string, int>& m, const std::string& cell, std::size_t line_no,
              const std::string& column) {
    auto it = m.find(cell);
    if (it == m.end())
        throw DataError("line " + std::to_string(line_no) + ": value '" + cell +
                        "' in column '" + column + "' has no class mapping");
    return it->second;
}

struct ColumnStats {
    double mean = 0.0;
    double stddev = 1.0;
};

ColumnStats standardization_stats(const std::vector<double>& values) {
    ColumnStats st;
    if (values.empty()) return st;
    double sum = 0.0;
    for (double v : values) sum += v;
    st.mean = sum / double(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - st.mean) * (v - st.mean);
    st.stddev = std::sqrt(ss / double(values.size()));
    if (st.stddev < 1e-12) st.stddev = 1.0; // constant column encodes as zeros
    return st;
}

Dataset encode_rows(const Frame& frame, FeatureCodec& codec, const std::vector<std::size_t>& rows,
                    const std::string& split_tag) {
    const std::size_t dim = codec.dim();
    ad::Tensor x = ad::Tensor::zeros({rows.size(), dim});
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& cells = frame.rows[rows[r]];
        std::size_t at = 0;
        for (std::size_t c = 0; c < codec.columns.size(); ++c) {
            const auto& col = codec.columns[c];
            if (col.kind == ColumnKind::Numeric) {
                const double v = parse_double(cells[c], rows[r] + 1, col.name);
                x.at(r, at) = (v - col.mean) / col.stddev;
                at += 1;
            } else {
                auto it = std::lower_bound(col.levels.begin(), col.levels.end(), cells[c]);
                if (it != col.levels.end() && *it == cells[c])
                    x.at(r, at + std::size_t(it - col.levels.begin())) = 1.0;
                else
                    codec.unknown_category_count += 1; // all-zeros row chunk
                at += col.levels.size();
            }
        }
    }
    Dataset d;
    d.x = std::move(x);
    d.y.reserve(rows.size());
    d.s.reserve(rows.size());
    for (std::size_t r : rows) {
        d.y.push_back(frame.y[r]);
        d.s.push_back(frame.s[r]);
    }
    d.n_classes = frame.n_classes;
    d.m_classes = frame.m_classes;
    d.feature_names = codec.feature_names();
    d.split = split_tag;
    d.provenance = frame.provenance;
    return d;
}

std::vector<std::size_t> iota_rows(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

void write_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw IoError("'" + path + "' is truncated");
    return v;
}

constexpr char kCacheMagic[8] = {'F', 'D', 'D', 'A', 'T', 'A', '0', '1'};

} // namespace

ColumnKind column_kind_from_string(const std::string& s) {
    if (s == "numeric") return ColumnKind::Numeric;
    if (s == "categorical") return ColumnKind::Categorical;
    if (s == "drop") return ColumnKind::Drop;
    throw ConfigError("schema: unknown column kind '" + s +
                      "'; expected numeric, categorical or drop");
}

const char* column_kind_name(ColumnKind k) {
    switch (k) {
    case ColumnKind::Numeric: return "numeric";
    case ColumnKind::Categorical: return "categorical";
    case ColumnKind::Drop: return "drop";
    }
    throw InvalidArgument("unknown column kind value");
}

void DatasetSchema::validate() const {
    if (columns.empty()) throw ConfigError("schema: no columns");
    std::set<std::string> seen;
    for (const auto& c : columns) {
        if (c.name.empty()) throw ConfigError("schema: column with empty name");
        if (!seen.insert(c.name).second)
            throw ConfigError("schema: duplicate column '" + c.name + "'");
    }
    if (target_column.empty()) throw ConfigError("schema: target column not set");
    if (sensitive_column.empty()) throw ConfigError("schema: sensitive column not set");
    if (target_column == sensitive_column)
        throw ConfigError("schema: target and sensitive columns must differ");
    if (!seen.count(target_column))
        throw ConfigError("schema: target column '" + target_column + "' not in column list");
    if (!seen.count(sensitive_column))
        throw ConfigError("schema: sensitive column '" + sensitive_column + "' not in column list");
    check_label_map(target_map, "target");
    check_label_map(sensitive_map, "sensitive");
}

std::size_t DatasetSchema::column_index(const std::string& n) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == n) return i;
    throw ConfigError("schema: no column named '" + n + "'");
}

DatasetSchema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open schema file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError("schema '" + path + "' is not valid JSON: " + std::string(e.what()));
    }
    DatasetSchema schema;
    try {
        schema.name = j.value("name", std::string{});
        const std::string d = j.value("delimiter", std::string{","});
        if (d.size() != 1)
            throw ConfigError("schema: delimiter must be a single character, got '" + d + "'");
        schema.delimiter = d[0];
        schema.has_header = j.value("has_header", true);
        schema.missing_token = j.value("missing_token", std::string{});
        for (const auto& c : j.at("columns")) {
            SchemaColumn col;
            col.name = c.at("name").get<std::string>();
            col.kind = column_kind_from_string(c.at("kind").get<std::string>());
            schema.columns.push_back(std::move(col));
        }
        schema.target_column = j.at("target").at("column").get<std::string>();
        for (const auto& [k, v] : j.at("target").at("classes").items())
            schema.target_map[k] = v.get<int>();
        schema.sensitive_column = j.at("sensitive").at("column").get<std::string>();
        for (const auto& [k, v] : j.at("sensitive").at("classes").items())
            schema.sensitive_map[k] = v.get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("schema '" + path + "' is malformed: " + std::string(e.what()));
    }
    schema.validate();
    return schema;
}

Frame load_frame(const std::string& path, const DatasetSchema& schema) {
    schema.validate();
    std::ifstream in(path);
    if (!in) throw IoError("cannot open data file '" + path + "'");

    Frame frame;
    frame.name = schema.name;
    frame.provenance = sha256_file(path);
    frame.n_classes = map_classes(schema.target_map);
    frame.m_classes = map_classes(schema.sensitive_map);

    const std::size_t target_idx = schema.column_index(schema.target_column);
    const std::size_t sensitive_idx = schema.column_index(schema.sensitive_column);
    std::vector<std::size_t> feature_idx;
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
        if (i == target_idx || i == sensitive_idx) continue;
        if (schema.columns[i].kind == ColumnKind::Drop) continue;
        feature_idx.push_back(i);
        frame.feature_columns.push_back(schema.columns[i]);
    }
    if (feature_idx.empty()) throw ConfigError("schema: no feature columns remain");

    std::string line;
    std::size_t line_no = 0;
    bool header_skipped = !schema.has_header;
    while (std::getline(in, line)) {
        line_no += 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (line[0] == '|') continue; // comment/preamble line
        if (!header_skipped) {
            header_skipped = true;
            continue;
        }
        std::vector<std::string> cells = split_line(line, schema.delimiter);
        if (cells.size() != schema.columns.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(schema.columns.size()) + " columns, got " +
                            std::to_string(cells.size()));
        frame.parsed_rows += 1;

        bool missing = false;
        if (!schema.missing_token.empty()) {
            for (std::size_t i : feature_idx)
                if (cells[i] == schema.missing_token) missing = true;
            if (cells[target_idx] == schema.missing_token ||
                cells[sensitive_idx] == schema.missing_token)
                missing = true;
        }
        if (missing) {
            frame.dropped_missing += 1;
            continue;
        }

        frame.y.push_back(map_label(schema.target_map, cells[target_idx], line_no,
                                    schema.target_column));
        frame.s.push_back(map_label(schema.sensitive_map, cells[sensitive_idx], line_no,
                                    schema.sensitive_column));
        std::vector<std::string> feats;
        feats.reserve(feature_idx.size());
        for (std::size_t i : feature_idx) feats.push_back(cells[i]);
        frame.rows.push_back(std::move(feats));
    }
    if (frame.rows.empty()) throw DataError("'" + path + "' contains no usable rows");
    return frame;
}

void Dataset::validate() const {
    if (x.rank() != 2) throw DataError("dataset: feature matrix must be rank 2");
    if (x.rows() != y.size() || y.size() != s.size())
        throw DataError("dataset: row/label count mismatch");
    if (!x.all_finite()) throw DataError("dataset: non-finite feature values");
    if (n_classes < 2 || m_classes < 2) throw DataError("dataset: class counts must be >= 2");
    for (int v : y)
        if (v < 0 || std::size_t(v) >= n_classes) throw DataError("dataset: target label out of range");
    for (int v : s)
        if (v < 0 || std::size_t(v) >= m_classes)
            throw DataError("dataset: sensitive label out of range");
}

std::size_t FeatureCodec::dim() const {
    std::size_t d = 0;
    for (const auto& c : columns)
        d += (c.kind == ColumnKind::Numeric) ? 1 : c.levels.size();
    return d;
}

std::vector<std::string> FeatureCodec::feature_names() const {
    std::vector<std::string> names;
    for (const auto& c : columns) {
        if (c.kind == ColumnKind::Numeric) {
            names.push_back(c.name);
        } else {
            for (const auto& lvl : c.levels) names.push_back(c.name + "=" + lvl);
        }
    }
    return names;
}

FeatureCodec fit_codec(const Frame& frame, const std::vector<std::size_t>& fit_rows) {
    if (fit_rows.empty()) throw InvalidArgument("fit_codec: no rows to fit on");
    FeatureCodec codec;
    for (std::size_t c = 0; c < frame.feature_columns.size(); ++c) {
        FeatureCodec::Column col;
        col.name = frame.feature_columns[c].name;
        col.kind = frame.feature_columns[c].kind;
        if (col.kind == ColumnKind::Numeric) {
            std::vector<double> values;
            values.reserve(fit_rows.size());
            for (std::size_t r : fit_rows)
                values.push_back(parse_double(frame.rows[r][c], r + 1, col.name));
            const ColumnStats st = standardization_stats(values);
            col.mean = st.mean;
            col.stddev = st.stddev;
        } else {
            std::set<std::string> levels;
            for (std::size_t r : fit_rows) levels.insert(frame.rows[r][c]);
            col.levels.assign(levels.begin(), levels.end()); // sorted: stable layout
        }
        codec.columns.push_back(std::move(col));
    }
    return codec;
}

SplitIndices split_stratified(const std::vector<int>& y, const std::vector<int>& s,
                              double test_fraction, std::uint64_t seed, StratifyOn on) {
    if (y.size() != s.size()) throw InvalidArgument("split: y and s sizes differ");
    if (y.empty()) throw InvalidArgument("split: empty label set");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw InvalidArgument("split: test fraction must be in (0, 1)");

    std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < y.size(); ++i) {
        std::pair<int, int> key{0, 0};
        switch (on) {
        case StratifyOn::Target: key = {y[i], 0}; break;
        case StratifyOn::Sensitive: key = {s[i], 0}; break;
        case StratifyOn::Both: key = {y[i], s[i]}; break;
        }
        strata[key].push_back(i);
    }

    Rng rng(mix_seed(seed, 17));
    SplitIndices out;
    for (auto& [key, rows] : strata) {
        if (rows.size() < 2)
            throw InvalidArgument("split: stratum (" + std::to_string(key.first) + "," +
                                  std::to_string(key.second) + ") has fewer than 2 samples");
        const std::vector<std::size_t> perm = rng.permutation(rows.size());
        std::size_t n_test = std::size_t(std::lround(test_fraction * double(rows.size())));
        n_test = std::clamp<std::size_t>(n_test, 1, rows.size() - 1);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i < n_test)
                out.test.push_back(rows[perm[i]]);
            else
                out.train.push_back(rows[perm[i]]);
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

Splits encode_splits(const Frame& frame, const SplitIndices& idx) {
    FeatureCodec codec = fit_codec(frame, idx.train);
    Splits out;
    out.train = encode_rows(frame, codec, idx.train, "train");
    out.test = encode_rows(frame, codec, idx.test, "test");
    out.unknown_categories = codec.unknown_category_count;
    out.train.validate();
    out.test.validate();
    return out;
}

Splits encode_pair(const Frame& train, const Frame& test) {
    if (train.feature_columns.size() != test.feature_columns.size())
        throw DataError("train/test frames have different column layouts");
    for (std::size_t i = 0; i < train.feature_columns.size(); ++i)
        if (train.feature_columns[i].name != test.feature_columns[i].name)
            throw DataError("train/test frames disagree on column '" +
                            train.feature_columns[i].name + "'");
    FeatureCodec codec = fit_codec(train, iota_rows(train.rows.size()));
    Splits out;
    out.train = encode_rows(train, codec, iota_rows(train.rows.size()), "train");
    out.test = encode_rows(test, codec, iota_rows(test.rows.size()), "test");
    out.unknown_categories = codec.unknown_category_count;
    out.train.validate();
    out.test.validate();
    return out;
}

Dataset encode_all(const Frame& frame) {
    FeatureCodec codec = fit_codec(frame, iota_rows(frame.rows.size()));
    Dataset d = encode_rows(frame, codec, iota_rows(frame.rows.size()), "all");
    d.validate();
    return d;
}

void SyntheticSpec::validate() const {
    if (rows < 4) throw ConfigError("synthetic: need at least 4 rows");
    if (!(rho >= -1.0 && rho <= 1.0)) throw ConfigError("synthetic: rho must be in [-1, 1]");
    if (obs_dim == 0) throw ConfigError("synthetic: obs_dim must be positive");
    if (mix_hidden == 0) throw ConfigError("synthetic: mix_hidden must be positive");
    if (!(noise >= 0.0)) throw ConfigError("synthetic: noise must be non-negative");
}

SyntheticDraw gen_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const Rng base(spec.seed);
    Rng latent_rng = base.fork(1);
    Rng mix_rng = base.fork(2);
    Rng noise_rng = base.fork(3);

    const std::size_t n = spec.rows, H = spec.mix_hidden, D = spec.obs_dim;

    // fixed random two-layer mixing map
    std::vector<double> a1 = mix_rng.normal_vec(2 * H);
    std::vector<double> b1 = mix_rng.normal_vec(H);
    std::vector<double> a2 = mix_rng.normal_vec(H * D);
    std::vector<double> b2 = mix_rng.normal_vec(D);
    for (double& v : a1) v /= std::sqrt(2.0);
    for (double& v : b1) v *= 0.1;
    for (double& v : a2) v /= std::sqrt(double(H));
    for (double& v : b2) v *= 0.1;

    SyntheticDraw out;
    out.u_y.resize(n);
    out.u_s.resize(n);
    ad::Tensor x = ad::Tensor::zeros({n, D});
    std::vector<int> y(n), s(n);
    const double ortho = std::sqrt(std::max(0.0, 1.0 - spec.rho * spec.rho));

    std::vector<double> hidden(H);
    for (std::size_t i = 0; i < n; ++i) {
        const double uy = latent_rng.normal();
        const double us = spec.rho * uy + ortho * latent_rng.normal();
        out.u_y[i] = uy;
        out.u_s[i] = us;
        y[i] = uy > 0.0 ? 1 : 0;
        s[i] = us > 0.0 ? 1 : 0;
        const double in0 = uy;
        const double in1 = spec.sensitive_channel ? us : 0.0;
        for (std::size_t h = 0; h < H; ++h)
            hidden[h] = std::tanh(in0 * a1[h] + in1 * a1[H + h] + b1[h]);
        for (std::size_t d = 0; d < D; ++d) {
            double v = b2[d];
            for (std::size_t h = 0; h < H; ++h) v += hidden[h] * a2[h * D + d];
            x.at(i, d) = v + spec.noise * noise_rng.normal();
        }
    }

    std::ostringstream prov;
    prov << "synthetic;rows=" << n << ";rho=" << spec.rho << ";obs_dim=" << D
         << ";mix_hidden=" << H << ";noise=" << spec.noise << ";seed=" << spec.seed
         << ";sensitive_channel=" << (spec.sensitive_channel ? 1 : 0);

    Dataset& d = out.all;
    d.x = std::move(x);
    d.y = std::move(y);
    d.s = std::move(s);
    d.n_classes = 2;
    d.m_classes = 2;
    for (std::size_t i = 0; i < D; ++i) d.feature_names.push_back("f" + std::to_string(i));
    d.split = "all";
    d.provenance = sha256_hex(prov.str());
    d.validate();
    return out;
}

Splits split_and_standardize(const Dataset& all, double test_fraction, std::uint64_t seed,
                             StratifyOn on) {
    all.validate();
    const SplitIndices idx = split_stratified(all.y, all.s, test_fraction, seed, on);
    const std::size_t dim = all.dim();

    auto slice = [&](const std::vector<std::size_t>& rows, const std::string& tag) {
        Dataset d;
        d.x = ad::Tensor::zeros({rows.size(), dim});
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (std::size_t c = 0; c < dim; ++c) d.x.at(r, c) = all.x.at(rows[r], c);
            d.y.push_back(all.y[rows[r]]);
            d.s.push_back(all.s[rows[r]]);
        }
        d.n_classes = all.n_classes;
        d.m_classes = all.m_classes;
        d.feature_names = all.feature_names;
        d.split = tag;
        d.provenance = all.provenance;
        return d;
    };
    Splits out;
    out.train = slice(idx.train, "train");
    out.test = slice(idx.test, "test");

    for (std::size_t c = 0; c < dim; ++c) {
        std::vector<double> values(out.train.rows());
        for (std::size_t r = 0; r < out.train.rows(); ++r) values[r] = out.train.x.at(r, c);
        const ColumnStats st = standardization_stats(values);
        for (std::size_t r = 0; r < out.train.rows(); ++r)
            out.train.x.at(r, c) = (out.train.x.at(r, c) - st.mean) / st.stddev;
        for (std::size_t r = 0; r < out.test.rows(); ++r)
            out.test.x.at(r, c) = (out.test.x.at(r, c) - st.mean) / st.stddev;
    }
    out.train.validate();
    out.test.validate();
    return out;
}

double majority_baseline(const std::vector<int>& labels) {
    if (labels.empty()) throw InvalidArgument("majority_baseline: empty labels");
    std::map<int, std::size_t> counts;
    for (int v : labels) counts[v] += 1;
    std::size_t best = 0;
    for (const auto& [v, c] : counts) best = std::max(best, c);
    return double(best) / double(labels.size());
}

void save_cache(const std::string& path, const Dataset& d) {
    d.validate();
    nlohmann::json header;
    header["format_version"] = 1;
    header["split"] = d.split;
    header["rows"] = d.rows();
    header["dim"] = d.dim();
    header["n_classes"] = d.n_classes;
    header["m_classes"] = d.m_classes;
    header["provenance"] = d.provenance;
    header["feature_names"] = d.feature_names;
    const std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kCacheMagic, sizeof kCacheMagic);
    write_u64(out, hs.size());
    out.write(hs.data(), std::streamsize(hs.size()));
    out.write(reinterpret_cast<const char*>(d.x.raw()), std::streamsize(d.x.size() * 8));
    std::vector<std::int32_t> labels(d.y.begin(), d.y.end());
    out.write(reinterpret_cast<const char*>(labels.data()), std::streamsize(labels.size() * 4));
    labels.assign(d.s.begin(), d.s.end());
    out.write(reinterpret_cast<const char*>(labels.data()), std::streamsize(labels.size() * 4));
    if (!out) throw IoError("write failed for '" + path + "'");
}

Dataset load_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset cache '" + path + "'");
    char magic[sizeof kCacheMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kCacheMagic, sizeof magic) != 0)
        throw IoError("'" + path + "' is not a dataset cache (bad magic)");
    const std::uint64_t hlen = read_u64(in, path);
    if (hlen == 0 || hlen > (1ull << 30)) throw IoError("'" + path + "' has a corrupt header");
    std::string hs(hlen, '\0');
    in.read(hs.data(), std::streamsize(hlen));
    if (!in) throw IoError("'" + path + "' is truncated");

    Dataset d;
    std::size_t rows = 0, dim = 0;
    try {
        const nlohmann::json header = nlohmann::json::parse(hs);
        const int version = header.at("format_version").get<int>();
        if (version != 1)
            throw IoError("'" + path + "' uses unsupported cache format version " +
                          std::to_string(version));
        d.split = header.at("split").get<std::string>();
        rows = header.at("rows").get<std::size_t>();
        dim = header.at("dim").get<std::size_t>();
        d.n_classes = header.at("n_classes").get<std::size_t>();
        d.m_classes = header.at("m_classes").get<std::size_t>();
        d.provenance = header.at("provenance").get<std::string>();
        d.feature_names = header.at("feature_names").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError("'" + path + "' header is malformed: " + std::string(e.what()));
    }

    d.x = ad::Tensor::zeros({rows, dim});
    in.read(reinterpret_cast<char*>(d.x.raw()), std::streamsize(rows * dim * 8));
    std::vector<std::int32_t> labels(rows);
    in.read(reinterpret_cast<char*>(labels.data()), std::streamsize(rows * 4));
    d.y.assign(labels.begin(), labels.end());
    in.read(reinterpret_cast<char*>(labels.data()), std::streamsize(rows * 4));
    d.s.assign(labels.begin(), labels.end());
    if (!in) throw IoError("'" + path + "' is truncated");
    d.validate();
    return d;
}

} // namespace fairdisc::data
