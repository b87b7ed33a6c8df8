#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fairdisc/tensor.hpp"

namespace fairdisc::data {

enum class ColumnKind { Numeric, Categorical, Drop };

ColumnKind column_kind_from_string(const std::string& s);
const char* column_kind_name(ColumnKind k);

struct SchemaColumn {
    std::string name;
    ColumnKind kind = ColumnKind::Drop;
};

// Column layout plus label mappings for one tabular source. The sensitive
// column is never part of the feature matrix; if it were, leakage probes
// would just read it back.
struct DatasetSchema {
    std::string name;
    char delimiter = ',';
    bool has_header = true;
    std::vector<SchemaColumn> columns; // in file order
    std::string target_column;
    std::map<std::string, int> target_map; // raw cell -> class index
    std::string sensitive_column;
    std::map<std::string, int> sensitive_map;
    std::string missing_token; // rows containing it in a used column are dropped

    void validate() const;
    std::size_t column_index(const std::string& name) const;
};

DatasetSchema load_schema(const std::string& path);

// Parsed rows with labels mapped but features still raw strings.
struct Frame {
    std::string name;
    std::vector<SchemaColumn> feature_columns;  // target/sensitive/drop excluded
    std::vector<std::vector<std::string>> rows; // feature cells, column order
    std::vector<int> y;
    std::vector<int> s;
    std::size_t n_classes = 0;
    std::size_t m_classes = 0;
    std::size_t parsed_rows = 0;
    std::size_t dropped_missing = 0;
    std::string provenance; // sha256 of the source file
};

Frame load_frame(const std::string& path, const DatasetSchema& schema);

// One split, fully encoded.
struct Dataset {
    ad::Tensor x; // rows x dim, numerics standardized with train statistics
    std::vector<int> y;
    std::vector<int> s;
    std::size_t n_classes = 0;
    std::size_t m_classes = 0;
    std::vector<std::string> feature_names;
    std::string split; // "train" / "test" / "all"
    std::string provenance;

    std::size_t rows() const { return y.size(); }
    std::size_t dim() const { return x.rank() == 2 ? x.cols() : 0; }
    void validate() const;
};

// Encoding fitted on training rows only: categorical level tables and
// numeric standardization statistics.
struct FeatureCodec {
    struct Column {
        std::string name;
        ColumnKind kind = ColumnKind::Drop;
        std::vector<std::string> levels; // categorical: level -> one-hot slot
        double mean = 0.0;
        double stddev = 1.0;
    };
    std::vector<Column> columns;
    std::size_t unknown_category_count = 0; // test-time levels unseen in train

    std::size_t dim() const;
    std::vector<std::string> feature_names() const;
};

FeatureCodec fit_codec(const Frame& frame, const std::vector<std::size_t>& fit_rows);

struct Splits {
    Dataset train;
    Dataset test;
    std::size_t unknown_categories = 0;
};

enum class StratifyOn { Target, Sensitive, Both };

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Seeded stratified split over row indices; class proportions preserved
// within one sample per stratum.
SplitIndices split_stratified(const std::vector<int>& y, const std::vector<int>& s,
                              double test_fraction, std::uint64_t seed, StratifyOn on);

// Fits the codec on the train rows, encodes both splits.
Splits encode_splits(const Frame& frame, const SplitIndices& idx);

// Published-partition route (e.g. separate train/test files): fits on the
// train frame, encodes both.
Splits encode_pair(const Frame& train, const Frame& test);

// Self-fitted single split, tagged "all". Standardization leaks by
// construction here; use only for toy data or when a split follows upstream.
Dataset encode_all(const Frame& frame);

struct SyntheticSpec {
    std::size_t rows = 10000;
    double rho = 0.0;          // latent correlation between the two factors
    std::size_t obs_dim = 16;  // observed feature count
    std::size_t mix_hidden = 32;
    double noise = 0.1;
    std::uint64_t seed = 7;
    bool sensitive_channel = true; // false: mixing sees only the target factor

    void validate() const;
};

struct SyntheticDraw {
    Dataset all; // unstandardized, split "all"
    std::vector<double> u_y, u_s;
};

// Latent pair (u_y, u_s) ~ bivariate normal with correlation rho;
// y = sign(u_y), s = sign(u_s); X = affine-tanh-affine mix of the latents
// plus isotropic noise.
SyntheticDraw gen_synthetic(const SyntheticSpec& spec);

// Stratified split of an encoded dataset plus per-column standardization
// fitted on the train rows (the synthetic route into training).
Splits split_and_standardize(const Dataset& all, double test_fraction, std::uint64_t seed,
                             StratifyOn on = StratifyOn::Both);

double majority_baseline(const std::vector<int>& labels);

// Versioned binary cache: JSON header (dims, class counts, provenance),
// then row-major float64 features and int32 label arrays.
void save_cache(const std::string& path, const Dataset& d);
Dataset load_cache(const std::string& path);

} // namespace fairdisc::data
