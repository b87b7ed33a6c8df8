#include "fairdisc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <thread>

#include "fairdisc/errors.hpp"
#include "fairdisc/nn.hpp"
#include "fairdisc/rng.hpp"

namespace fairdisc::eval {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_escape(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return out;
}

std::size_t argmax_row(const ad::Tensor& m, std::size_t row) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < m.cols(); ++c)
        if (m.at(row, c) > m.at(row, best)) best = c;
    return best;
}

double accuracy(const nn::MLP& net, const ad::Tensor& emb, const std::vector<int>& labels) {
    const ad::Tensor logits = net.forward_plain(emb);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < labels.size(); ++r)
        if (argmax_row(logits, r) == std::size_t(labels[r])) hits += 1;
    return double(hits) / double(labels.size());
}

// Runs body(i) for i in [0, n), spread over `parallel` threads. Cells are
// independent; slot-indexed writes keep aggregation deterministic.
void for_each_cell(std::size_t n, std::size_t parallel, const std::function<void(std::size_t)>& body) {
    parallel = std::max<std::size_t>(1, std::min(parallel, n));
    if (parallel == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < parallel; ++t)
        workers.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += parallel) body(i);
        });
    for (auto& w : workers) w.join();
}

} // namespace

Embedding embedding_from_string(const std::string& s) {
    if (s == "target-mean") return Embedding::TargetMean;
    if (s == "target-sample") return Embedding::TargetSample;
    if (s == "sensitive-mean") return Embedding::SensitiveMean;
    throw ConfigError("unknown embedding '" + s +
                      "'; expected target-mean, target-sample or sensitive-mean");
}

const char* embedding_name(Embedding e) {
    switch (e) {
    case Embedding::TargetMean: return "target-mean";
    case Embedding::TargetSample: return "target-sample";
    case Embedding::SensitiveMean: return "sensitive-mean";
    }
    throw InvalidArgument("unknown embedding value");
}

void ProbeConfig::validate() const {
    if (epochs == 0) throw ConfigError("probe: epochs must be at least 1");
    if (batch_size == 0) throw ConfigError("probe: batch_size must be at least 1");
    if (!(lr > 0.0)) throw ConfigError("probe: learning rate must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("probe: weight decay must be non-negative");
    for (std::size_t w : hidden)
        if (w == 0) throw ConfigError("probe: hidden widths must be positive");
}

ad::Tensor extract_embeddings(const model::FairModel& m, const ad::Tensor& x, Embedding which,
                              std::uint64_t sample_seed) {
    const model::FairModel::Codes codes = m.encode(x);
    switch (which) {
    case Embedding::TargetMean: return codes.mu_t;
    case Embedding::SensitiveMean:
        if (codes.mu_s.empty())
            throw InvalidArgument(std::string("variant ") +
                                  model::variant_name(m.config().variant) +
                                  " has no sensitive branch to embed");
        return codes.mu_s;
    case Embedding::TargetSample: {
        if (codes.std_t.empty()) return codes.mu_t; // deterministic code: sample == mean
        Rng rng(mix_seed(sample_seed, 29));
        ad::Tensor z = codes.mu_t;
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += codes.std_t[i] * rng.normal();
        return z;
    }
    }
    throw InvalidArgument("unknown embedding value");
}

ProbeOutcome train_probe(const ad::Tensor& train_emb, const std::vector<int>& train_labels,
                         const ad::Tensor& test_emb, const std::vector<int>& test_labels,
                         std::size_t classes, const ProbeConfig& pc) {
    pc.validate();
    if (train_emb.rank() != 2 || test_emb.rank() != 2)
        throw InvalidArgument("train_probe: embeddings must be rank 2");
    if (train_emb.rows() != train_labels.size() || test_emb.rows() != test_labels.size())
        throw InvalidArgument("train_probe: embedding/label row mismatch");
    if (train_emb.cols() != test_emb.cols())
        throw InvalidArgument("train_probe: train/test embedding widths differ");
    if (classes < 2) throw InvalidArgument("train_probe: need at least 2 classes");
    std::set<int> distinct(train_labels.begin(), train_labels.end());
    if (distinct.size() < 2)
        throw InvalidArgument("train_probe: training labels contain a single class");
    for (int v : train_labels)
        if (v < 0 || std::size_t(v) >= classes)
            throw InvalidArgument("train_probe: label out of range");

    nn::ParamStore store;
    nn::MLPSpec spec;
    spec.input_dim = train_emb.cols();
    spec.hidden = pc.hidden;
    spec.output_dim = classes;
    spec.activation = pc.activation;
    Rng init_rng(mix_seed(pc.seed, 1));
    const nn::MLP net = nn::MLP::create(store, "probe", nn::Partition::TargetDisc, spec, init_rng);

    nn::AdamConfig oc;
    oc.lr = pc.lr;
    oc.weight_decay = pc.weight_decay;
    nn::Adam adam(store.all(), oc);
    Rng shuffle_rng(mix_seed(pc.seed, 2));

    const std::size_t n = train_emb.rows();
    const std::size_t dim = train_emb.cols();
    for (std::size_t epoch = 0; epoch < pc.epochs; ++epoch) {
        const std::vector<std::size_t> perm = shuffle_rng.permutation(n);
        for (std::size_t begin = 0; begin < n; begin += pc.batch_size) {
            const std::size_t end = std::min(begin + pc.batch_size, n);
            ad::Tensor xb = ad::Tensor::zeros({end - begin, dim});
            std::vector<std::size_t> yb;
            yb.reserve(end - begin);
            for (std::size_t i = begin; i < end; ++i) {
                for (std::size_t c = 0; c < dim; ++c)
                    xb.at(i - begin, c) = train_emb.at(perm[i], c);
                yb.push_back(std::size_t(train_labels[perm[i]]));
            }
            ad::Tape tape;
            const nn::TapeBinding bound(tape, store.all());
            ad::Var loss =
                nn::cross_entropy_mean(tape, net.forward(tape, bound, tape.leaf(std::move(xb))), yb);
            tape.backward(loss);
            bound.harvest();
            adam.step();
        }
    }

    ProbeOutcome out;
    out.train_accuracy = accuracy(net, train_emb, train_labels);
    out.test_accuracy = accuracy(net, test_emb, test_labels);
    return out;
}

RunResult evaluate(const model::FairModel& m, const data::Dataset& train,
                   const data::Dataset& test, const ProbeConfig& pc) {
    train.validate();
    test.validate();
    if (train.dim() != m.config().input_dim || test.dim() != m.config().input_dim)
        throw InvalidArgument("evaluate: dataset width does not match model input_dim");

    const std::uint64_t hash_before = m.param_hash();
    const ad::Tensor train_emb = extract_embeddings(m, train.x, pc.embedding, pc.seed);
    const ad::Tensor test_emb = extract_embeddings(m, test.x, pc.embedding, pc.seed + 1);

    ProbeConfig target_pc = pc;
    target_pc.seed = mix_seed(pc.seed, 3);
    ProbeConfig sensitive_pc = pc;
    sensitive_pc.seed = mix_seed(pc.seed, 4);

    RunResult r;
    r.variant = model::variant_name(m.config().variant);
    r.target_acc =
        train_probe(train_emb, train.y, test_emb, test.y, train.n_classes, target_pc).test_accuracy;
    r.sensitive_acc =
        train_probe(train_emb, train.s, test_emb, test.s, train.m_classes, sensitive_pc)
            .test_accuracy;
    r.target_majority = data::majority_baseline(test.y);
    r.sensitive_majority = data::majority_baseline(test.s);

    if (m.param_hash() != hash_before)
        throw Error("internal: encoder parameters changed during probe training");
    return r;
}

std::vector<AblationCell> run_ablation(const data::Dataset& train, const data::Dataset& test,
                                       const model::ModelConfig& base_model,
                                       const train::TrainConfig& base_train,
                                       const ProbeConfig& probe,
                                       const std::vector<std::uint64_t>& seeds,
                                       std::size_t parallel) {
    if (seeds.empty()) throw InvalidArgument("run_ablation: need at least one seed");
    const std::vector<model::Variant> variants = model::all_variants();
    std::vector<AblationCell> cells(variants.size() * seeds.size());
    for_each_cell(cells.size(), parallel, [&](std::size_t i) {
        AblationCell& cell = cells[i];
        cell.variant = variants[i / seeds.size()];
        cell.seed = seeds[i % seeds.size()];
        try {
            model::ModelConfig mc = base_model;
            mc.variant = cell.variant;
            train::TrainConfig tc = base_train;
            tc.seed = cell.seed;
            const train::TrainResult tr = train::train(train, &test, mc, tc);
            cell.result = evaluate(tr.model, train, test, probe);
            cell.result.seed = cell.seed;
            cell.ok = true;
        } catch (const std::exception& e) {
            cell.ok = false;
            cell.error = e.what();
        }
    });
    return cells;
}

std::string ablation_csv(const std::vector<AblationCell>& cells) {
    std::string out = "variant,seed,ok,target_acc,sensitive_acc,target_majority,"
                      "sensitive_majority,error\n";
    for (const AblationCell& c : cells) {
        out += model::variant_name(c.variant);
        out += "," + std::to_string(c.seed) + "," + (c.ok ? "1" : "0");
        if (c.ok) {
            out += "," + fmt(c.result.target_acc) + "," + fmt(c.result.sensitive_acc) + "," +
                   fmt(c.result.target_majority) + "," + fmt(c.result.sensitive_majority) + ",";
        } else {
            out += ",,,,," + csv_escape(c.error);
        }
        out.push_back('\n');
    }
    return out;
}

namespace {

struct MeanStd {
    double mean = 0.0, std = 0.0;
    std::size_t n = 0;
};

MeanStd mean_std(const std::vector<double>& v) {
    MeanStd ms;
    ms.n = v.size();
    if (v.empty()) return ms;
    for (double x : v) ms.mean += x;
    ms.mean /= double(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - ms.mean) * (x - ms.mean);
        ms.std = std::sqrt(ss / double(v.size() - 1));
    }
    return ms;
}

} // namespace

std::string ablation_summary_csv(const std::vector<AblationCell>& cells) {
    std::string out = "variant,n,target_acc_mean,target_acc_std,sensitive_acc_mean,"
                      "sensitive_acc_std,sensitive_majority\n";
    for (model::Variant v : model::all_variants()) {
        std::vector<double> target, sensitive, majority;
        for (const AblationCell& c : cells) {
            if (c.variant != v || !c.ok) continue;
            target.push_back(c.result.target_acc);
            sensitive.push_back(c.result.sensitive_acc);
            majority.push_back(c.result.sensitive_majority);
        }
        const MeanStd t = mean_std(target), s = mean_std(sensitive), m = mean_std(majority);
        out += std::string(model::variant_name(v)) + "," + std::to_string(t.n) + "," +
               fmt(t.mean) + "," + fmt(t.std) + "," + fmt(s.mean) + "," + fmt(s.std) + "," +
               fmt(m.mean) + "\n";
    }
    return out;
}

void SweepGrid::validate() const {
    if (lambda_od.empty() || lambda_e.empty() || gamma_od.empty() || gamma_e.empty())
        throw ConfigError("sweep: every grid axis needs at least one value");
    for (double g : gamma_od)
        if (!(g > 0.0)) throw ConfigError("sweep: gamma_od values must be positive");
    for (double g : gamma_e)
        if (!(g > 0.0)) throw ConfigError("sweep: gamma_e values must be positive");
    for (double l : lambda_od)
        if (!(l >= 0.0)) throw ConfigError("sweep: lambda_od values must be non-negative");
    for (double l : lambda_e)
        if (!(l >= 0.0)) throw ConfigError("sweep: lambda_e values must be non-negative");
}

std::size_t SweepGrid::cells() const {
    return lambda_od.size() * lambda_e.size() * gamma_od.size() * gamma_e.size();
}

std::vector<SweepCell> run_sweep(const data::Dataset& train, const data::Dataset& test,
                                 const model::ModelConfig& base_model,
                                 const train::TrainConfig& base_train, const ProbeConfig& probe,
                                 const SweepGrid& grid, const std::vector<std::uint64_t>& seeds,
                                 std::size_t parallel) {
    grid.validate();
    if (seeds.empty()) throw InvalidArgument("run_sweep: need at least one seed");

    std::vector<SweepCell> cells;
    for (double lod : grid.lambda_od)
        for (double le : grid.lambda_e)
            for (double god : grid.gamma_od)
                for (double ge : grid.gamma_e)
                    for (std::uint64_t seed : seeds) {
                        SweepCell c;
                        c.lambda_od = lod;
                        c.lambda_e = le;
                        c.gamma_od = god;
                        c.gamma_e = ge;
                        c.seed = seed;
                        cells.push_back(c);
                    }

    for_each_cell(cells.size(), parallel, [&](std::size_t i) {
        SweepCell& cell = cells[i];
        try {
            model::ModelConfig mc = base_model;
            mc.variant = model::Variant::Full;
            train::TrainConfig tc = base_train;
            tc.seed = cell.seed;
            tc.lambda_od0 = cell.lambda_od;
            tc.lambda_e0 = cell.lambda_e;
            tc.gamma_od = cell.gamma_od;
            tc.gamma_e = cell.gamma_e;
            const train::TrainResult tr = train::train(train, &test, mc, tc);
            cell.result = evaluate(tr.model, train, test, probe);
            cell.result.seed = cell.seed;
            cell.ok = true;
        } catch (const std::exception& e) {
            cell.ok = false;
            cell.error = e.what();
        }
    });
    return cells;
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
    std::string out = "lambda_od,lambda_e,gamma_od,gamma_e,seed,ok,target_acc,sensitive_acc,"
                      "target_majority,sensitive_majority,error\n";
    for (const SweepCell& c : cells) {
        out += fmt(c.lambda_od) + "," + fmt(c.lambda_e) + "," + fmt(c.gamma_od) + "," +
               fmt(c.gamma_e) + "," + std::to_string(c.seed) + "," + (c.ok ? "1" : "0");
        if (c.ok) {
            out += "," + fmt(c.result.target_acc) + "," + fmt(c.result.sensitive_acc) + "," +
                   fmt(c.result.target_majority) + "," + fmt(c.result.sensitive_majority) + ",";
        } else {
            out += ",,,,," + csv_escape(c.error);
        }
        out.push_back('\n');
    }
    return out;
}

std::string embeddings_csv(const ad::Tensor& emb, const std::vector<int>& y,
                           const std::vector<int>& s) {
    if (emb.rank() != 2) throw InvalidArgument("embeddings_csv: embedding must be rank 2");
    if (emb.rows() != y.size() || y.size() != s.size())
        throw InvalidArgument("embeddings_csv: row/label count mismatch");
    std::string out;
    for (std::size_t c = 0; c < emb.cols(); ++c) out += "e" + std::to_string(c) + ",";
    out += "y,s\n";
    for (std::size_t r = 0; r < emb.rows(); ++r) {
        for (std::size_t c = 0; c < emb.cols(); ++c) out += fmt(emb.at(r, c)) + ",";
        out += std::to_string(y[r]) + "," + std::to_string(s[r]) + "\n";
    }
    return out;
}

} // namespace fairdisc::eval
