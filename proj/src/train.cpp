#include "fairdisc/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "fairdisc/errors.hpp"
#include "fairdisc/nn.hpp"
#include "fairdisc/rng.hpp"

namespace fairdisc::train {

namespace {

constexpr std::uint64_t kStreamInit = 11;
constexpr std::uint64_t kStreamShuffle = 12;
constexpr std::uint64_t kStreamNoise = 13;

std::size_t argmax_row(const ad::Tensor& probs, std::size_t row) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.cols(); ++c)
        if (probs.at(row, c) > probs.at(row, best)) best = c;
    return best;
}

double target_head_accuracy(const model::FairModel& m, const data::Dataset& d) {
    const model::FairModel::Codes codes = m.encode(d.x);
    const ad::Tensor probs = m.target_probs(codes.mu_t);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < d.rows(); ++r)
        if (argmax_row(probs, r) == std::size_t(d.y[r])) hits += 1;
    return double(hits) / double(d.rows());
}

double sensitive_head_accuracy(const model::FairModel& m, const data::Dataset& d) {
    if (!m.traits().sensitive_side) return std::numeric_limits<double>::quiet_NaN();
    const model::FairModel::Codes codes = m.encode(d.x);
    const ad::Tensor probs = m.sensitive_probs(codes.mu_s);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < d.rows(); ++r)
        if (argmax_row(probs, r) == std::size_t(d.s[r])) hits += 1;
    return double(hits) / double(d.rows());
}

model::Batch gather_batch(const data::Dataset& d, const std::vector<std::size_t>& perm,
                          std::size_t begin, std::size_t end) {
    const std::size_t dim = d.dim();
    model::Batch b;
    b.x = ad::Tensor::zeros({end - begin, dim});
    b.y.reserve(end - begin);
    b.s.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
        const std::size_t r = perm[i];
        for (std::size_t c = 0; c < dim; ++c) b.x.at(i - begin, c) = d.x.at(r, c);
        b.y.push_back(std::size_t(d.y[r]));
        b.s.push_back(std::size_t(d.s[r]));
    }
    return b;
}

void append_cell(std::string& out, double v, bool active) {
    out.push_back(',');
    if (!active || std::isnan(v)) return;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

} // namespace

ScheduleMode schedule_mode_from_string(const std::string& s) {
    if (s == "fixed-exponent") return ScheduleMode::FixedExponent;
    if (s == "compounding") return ScheduleMode::Compounding;
    throw ConfigError("unknown schedule mode '" + s +
                      "'; expected fixed-exponent or compounding");
}

const char* schedule_mode_name(ScheduleMode m) {
    switch (m) {
    case ScheduleMode::FixedExponent: return "fixed-exponent";
    case ScheduleMode::Compounding: return "compounding";
    }
    throw InvalidArgument("unknown schedule mode value");
}

double schedule_weight(double lambda0, double gamma, std::size_t t, std::size_t t_s,
                       ScheduleMode mode) {
    if (t_s == 0) throw InvalidArgument("schedule: step size must be positive");
    if (!(gamma > 0.0)) throw InvalidArgument("schedule: gamma must be positive");
    if (mode == ScheduleMode::FixedExponent)
        return lambda0 * std::pow(gamma, double(t / t_s));
    // compounding: lambda0 * prod_{i=1..t} gamma^(i/t_s), in closed form
    const double exponent = double(t) * double(t + 1) / (2.0 * double(t_s));
    return lambda0 * std::pow(gamma, exponent);
}

void TrainConfig::validate() const {
    if (max_epochs == 0) throw ConfigError("train: max_epochs must be at least 1");
    if (step_epochs == 0) throw ConfigError("train: step_epochs must be at least 1");
    if (batch_size == 0) throw ConfigError("train: batch_size must be at least 1");
    if (mc_samples == 0) throw ConfigError("train: mc_samples must be at least 1");
    if (!(gamma_e > 0.0)) throw ConfigError("train: gamma_e must be positive");
    if (!(gamma_od > 0.0)) throw ConfigError("train: gamma_od must be positive");
    if (!(lambda_e0 >= 0.0)) throw ConfigError("train: lambda_e0 must be non-negative");
    if (!(lambda_od0 >= 0.0)) throw ConfigError("train: lambda_od0 must be non-negative");
    if (!(lr >= 0.0)) throw ConfigError("train: learning rate must be non-negative");
    if (!(weight_decay >= 0.0)) throw ConfigError("train: weight decay must be non-negative");
}

TrainResult train(const data::Dataset& train_set, const data::Dataset* val_set,
                  const model::ModelConfig& model_config, const TrainConfig& train_config) {
    train_config.validate();
    train_set.validate();
    if (val_set) val_set->validate();

    model::ModelConfig mc = model_config;
    if (mc.input_dim == 0) mc.input_dim = train_set.dim();
    mc.validate();
    if (mc.input_dim != train_set.dim())
        throw ConfigError("train: model input_dim " + std::to_string(mc.input_dim) +
                          " does not match dataset dim " + std::to_string(train_set.dim()));
    if (mc.target_classes != train_set.n_classes)
        throw ConfigError("train: model target_classes " + std::to_string(mc.target_classes) +
                          " does not match dataset n_classes " +
                          std::to_string(train_set.n_classes));
    if (mc.sensitive_classes != train_set.m_classes)
        throw ConfigError("train: model sensitive_classes " +
                          std::to_string(mc.sensitive_classes) +
                          " does not match dataset m_classes " +
                          std::to_string(train_set.m_classes));

    model::FairModel fm(mc, mix_seed(train_config.seed, kStreamInit));
    Rng shuffle_rng(mix_seed(train_config.seed, kStreamShuffle));
    Rng noise_rng(mix_seed(train_config.seed, kStreamNoise));

    nn::AdamConfig opt;
    opt.lr = train_config.lr;
    opt.weight_decay = train_config.weight_decay;
    opt.decoupled_decay = train_config.decoupled_decay;
    nn::Adam adam(fm.trainable(), opt);

    TrainHistory history;
    history.has_s = fm.traits().sensitive_side;
    history.has_e = fm.traits().entropy;
    history.has_kl = fm.traits().stochastic;

    const std::size_t n = train_set.rows();
    const std::size_t B = train_config.batch_size;

    for (std::size_t epoch = 0; epoch < train_config.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lambda_e = schedule_weight(train_config.lambda_e0, train_config.gamma_e,
                                                epoch, train_config.step_epochs,
                                                train_config.schedule_mode);
        const double lambda_od = schedule_weight(train_config.lambda_od0, train_config.gamma_od,
                                                 epoch, train_config.step_epochs,
                                                 train_config.schedule_mode);
        const model::LossWeights weights{lambda_e, lambda_od};

        const std::vector<std::size_t> perm = shuffle_rng.permutation(n);
        model::LossValues sum;
        std::size_t batches = 0;
        for (std::size_t begin = 0; begin < n; begin += B) {
            const std::size_t end = std::min(begin + B, n);
            const model::Batch batch = gather_batch(train_set, perm, begin, end);

            ad::Tape tape;
            const nn::TapeBinding bound(tape, fm.trainable());
            model::ForwardOptions opts;
            opts.noise = fm.make_noise(end - begin, train_config.mc_samples, noise_rng);
            model::LossBreakdown lb;
            try {
                lb = fm.forward_losses(tape, bound, batch, weights, opts);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + " batch " +
                                   std::to_string(batches) + ": " + e.what());
            }
            model::masked_backward(tape, bound, lb);
            adam.step();

            sum.l_t += lb.values.l_t;
            sum.l_s += lb.values.l_s;
            sum.l_e += lb.values.l_e;
            sum.l_zt += lb.values.l_zt;
            sum.l_zs += lb.values.l_zs;
            sum.l_od += lb.values.l_od;
            sum.j += lb.values.j;
            batches += 1;
        }

        EpochStats st;
        st.epoch = epoch;
        st.loss.l_t = sum.l_t / double(batches);
        st.loss.l_s = sum.l_s / double(batches);
        st.loss.l_e = sum.l_e / double(batches);
        st.loss.l_zt = sum.l_zt / double(batches);
        st.loss.l_zs = sum.l_zs / double(batches);
        st.loss.l_od = sum.l_od / double(batches);
        st.loss.j = sum.j / double(batches);
        st.lambda_e = lambda_e;
        st.lambda_od = lambda_od;
        st.train_acc = target_head_accuracy(fm, train_set);
        st.train_sens_acc = sensitive_head_accuracy(fm, train_set);
        if (val_set) {
            st.val_acc = target_head_accuracy(fm, *val_set);
            st.val_sens_acc = sensitive_head_accuracy(fm, *val_set);
        } else {
            st.val_acc = std::numeric_limits<double>::quiet_NaN();
            st.val_sens_acc = std::numeric_limits<double>::quiet_NaN();
        }
        st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        history.epochs.push_back(st);
    }

    return TrainResult{std::move(fm), std::move(history)};
}

std::string history_csv(const TrainHistory& h) {
    std::string out = "epoch,l_t,l_s,l_e,l_zt,l_zs,l_od,j,lambda_e,lambda_od,"
                      "train_acc,val_acc,train_sens_acc,val_sens_acc\n";
    for (const EpochStats& st : h.epochs) {
        out += std::to_string(st.epoch);
        append_cell(out, st.loss.l_t, true);
        append_cell(out, st.loss.l_s, h.has_s);
        append_cell(out, st.loss.l_e, h.has_e);
        append_cell(out, st.loss.l_zt, h.has_kl);
        append_cell(out, st.loss.l_zs, h.has_kl);
        append_cell(out, st.loss.l_od, h.has_kl);
        append_cell(out, st.loss.j, true);
        append_cell(out, st.lambda_e, h.has_e);
        append_cell(out, st.lambda_od, h.has_kl);
        append_cell(out, st.train_acc, true);
        append_cell(out, st.val_acc, true);
        append_cell(out, st.train_sens_acc, h.has_s);
        append_cell(out, st.val_sens_acc, h.has_s);
        out.push_back('\n');
    }
    return out;
}

void write_history_csv(const std::string& path, const TrainHistory& h) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    const std::string csv = history_csv(h);
    out.write(csv.data(), std::streamsize(csv.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace fairdisc::train
