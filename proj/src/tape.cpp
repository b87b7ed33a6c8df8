#include "fairdisc/tape.hpp"

#include <algorithm>
#include <cmath>

#include "fairdisc/errors.hpp"

namespace fairdisc::ad {

const Tensor& Var::value() const {
    if (!tape) throw InvalidArgument("Var::value: detached handle");
    return tape->value(*this);
}

const Tensor& Var::grad() const {
    if (!tape) throw InvalidArgument("Var::grad: detached handle");
    return tape->grad(*this);
}

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    throw ConfigError("unknown activation '" + s + "' (expected relu or tanh)");
}

const char* activation_name(Activation a) {
    return a == Activation::Relu ? "relu" : "tanh";
}

Var Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&)> back) {
    Node n;
    n.grad = requires_grad ? Tensor::zeros(value.shape()) : Tensor{};
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::check_owned(Var v, const char* op) const {
    if (v.tape != this) {
        throw InvalidArgument(std::string(op) + ": operand does not live on this tape");
    }
    if (v.id >= nodes_.size()) {
        throw InvalidArgument(std::string(op) + ": stale node id");
    }
}

Var Tape::leaf(Tensor value, bool requires_grad) {
    return push(std::move(value), requires_grad, nullptr);
}

const Tensor& Tape::value(Var v) const {
    check_owned(v, "value");
    return node(v.id).value;
}

const Tensor& Tape::grad(Var v) const {
    check_owned(v, "grad");
    const Node& n = node(v.id);
    if (!n.requires_grad) throw InvalidArgument("grad: node does not require gradients");
    return n.grad;
}

bool Tape::requires_grad(Var v) const {
    check_owned(v, "requires_grad");
    return node(v.id).requires_grad;
}

namespace {

// a [r x c]  op  b [c] broadcast over the rows of a, or identical shapes.
enum class BroadcastKind { Same, RowVector };

BroadcastKind classify_broadcast(const Tensor& a, const Tensor& b, const char* op) {
    if (a.same_shape(b)) return BroadcastKind::Same;
    if (a.rank() == 2 && b.rank() == 1 && b.size() == a.cols()) return BroadcastKind::RowVector;
    throw InvalidArgument(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                          b.shape_str());
}

} // namespace

Var Tape::add(Var a, Var b) {
    check_owned(a, "add");
    check_owned(b, "add");
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    const BroadcastKind bc = classify_broadcast(av, bv, "add");
    Tensor out = av;
    if (bc == BroadcastKind::Same) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    } else {
        const std::size_t c = av.cols();
        for (std::size_t i = 0; i < av.rows(); ++i)
            for (std::size_t j = 0; j < c; ++j) out[i * c + j] += bv[j];
    }
    const bool arg = requires_grad(a), brg = requires_grad(b);
    Var o = push(std::move(out), arg || brg, nullptr);
    if (arg || brg) {
        const auto oi = o.id, ai = a.id, bi = b.id;
        node(oi).back = [oi, ai, bi, arg, brg, bc](Tape& t) {
            const Tensor& g = t.node(oi).grad;
            if (arg) {
                Tensor& ga = t.node(ai).grad;
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (brg) {
                Tensor& gb = t.node(bi).grad;
                if (bc == BroadcastKind::Same) {
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
                } else {
                    const std::size_t c = gb.size();
                    const std::size_t r = g.size() / c;
                    for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
                }
            }
        };
    }
    return o;
}

Var Tape::sub(Var a, Var b) {
    check_owned(a, "sub");
    check_owned(b, "sub");
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    const BroadcastKind bc = classify_broadcast(av, bv, "sub");
    Tensor out = av;
    if (bc == BroadcastKind::Same) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    } else {
        const std::size_t c = av.cols();
        for (std::size_t i = 0; i < av.rows(); ++i)
            for (std::size_t j = 0; j < c; ++j) out[i * c + j] -= bv[j];
    }
    const bool arg = requires_grad(a), brg = requires_grad(b);
    Var o = push(std::move(out), arg || brg, nullptr);
    if (arg || brg) {
        const auto oi = o.id, ai = a.id, bi = b.id;
        node(oi).back = [oi, ai, bi, arg, brg, bc](Tape& t) {
            const Tensor& g = t.node(oi).grad;
            if (arg) {
                Tensor& ga = t.node(ai).grad;
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (brg) {
                Tensor& gb = t.node(bi).grad;
                if (bc == BroadcastKind::Same) {
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                } else {
                    const std::size_t c = gb.size();
                    const std::size_t r = g.size() / c;
                    for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < c; ++j) gb[j] -= g[i * c + j];
                }
            }
        };
    }
    return o;
}

Var Tape::mul(Var a, Var b) {
    check_owned(a, "mul");
    check_owned(b, "mul");
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    const BroadcastKind bc = classify_broadcast(av, bv, "mul");
    Tensor out = av;
    if (bc == BroadcastKind::Same) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    } else {
        const std::size_t c = av.cols();
        for (std::size_t i = 0; i < av.rows(); ++i)
            for (std::size_t j = 0; j < c; ++j) out[i * c + j] *= bv[j];
    }
    const bool arg = requires_grad(a), brg = requires_grad(b);
    Var o = push(std::move(out), arg || brg, nullptr);
    if (arg || brg) {
        const auto oi = o.id, ai = a.id, bi = b.id;
        node(oi).back = [oi, ai, bi, arg, brg, bc](Tape& t) {
            const Tensor& g = t.node(oi).grad;
            const Tensor& av2 = t.node(ai).value;
            const Tensor& bv2 = t.node(bi).value;
            if (bc == BroadcastKind::Same) {
                if (arg) {
                    Tensor& ga = t.node(ai).grad;
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv2[i];
                }
                if (brg) {
                    Tensor& gb = t.node(bi).grad;
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av2[i];
                }
            } else {
                const std::size_t c = bv2.size();
                const std::size_t r = g.size() / c;
                if (arg) {
                    Tensor& ga = t.node(ai).grad;
                    for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[i * c + j] * bv2[j];
                }
                if (brg) {
                    Tensor& gb = t.node(bi).grad;
                    for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j] * av2[i * c + j];
                }
            }
        };
    }
    return o;
}

Var Tape::scale(Var a, double k) {
    check_owned(a, "scale");
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= k;
    const bool arg = requires_grad(a);
    Var o = push(std::move(out), arg, nullptr);
    if (arg) {
        const auto oi = o.id, ai = a.id;
        node(oi).back = [oi, ai, k](Tape& t) {
            const Tensor& g = t.node(oi).grad;
            Tensor& ga = t.node(ai).grad;
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += k * g[i];
        };
    }
    return o;
}

Var Tape::add_const(Var a, double k) {
    check_owned(a, "add_const");
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += k;
    const bool arg = requires_grad(a);
    Var o = push(std::move(out), arg, nullptr);
    if (arg) {
        const auto oi = o.id, ai = a.id;
        node(oi).back = [oi, ai](Tape& t) {
            const Tensor& g = t.node(oi).grad;
            Tensor& ga = t.node(ai).grad;
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        };
    }
    return o;
}

Var Tape::matmul(Var a, Var b) {
    check_owned(a, "matmul");
    check_owned(b, "matmul");
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
        throw InvalidArgument("matmul: shape mismatch " + av.shape_str() + " vs " + bv.shape_str());
    }
    const std::size_t r = av.rows(), k = av.cols(), c = bv.cols();
    Tensor out = Tensor::zeros({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        const double* arow = av.raw() + i * k;
        double* orow = out.raw() + i * c;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = arow[p];
            const double* brow = bv.raw() + p * c;
            for (std::size_t j = 0; j < c; ++j) orow[j] += aip * brow[j];
        }
    }
    const bool arg = requires_grad(a), brg = requires_grad(b);
    Var o = push(std::move(out), arg || brg, nullptr);
    if (arg || brg) {
        const auto oi = o.id, ai = a.id, bi = b.id;
        node(oi).back = [oi, ai, bi, arg, brg, r, k, c](Tape& t) {
            const Tensor& g = t.node(oi).grad;
            if (arg) {
                // dA = G * B^T
                Tensor& ga = t.node(ai).grad;
                const Tensor& bv2 = t.node(bi).value;
                for (std::size_t i = 0; i < r; ++i) {
                    const double* grow = g.raw() + i * c;
                    double* garow = ga.raw() + i * k;
                    for (std::size_t p = 0; p < k; ++p) {
                        const double* brow = bv2.raw() + p * c;
                        double acc = 0.0;
                        for (std::size_t j = 0; j < c; ++j) acc += grow[j] * brow[j];
                        garow[p] += acc;
                    }
                }
            }
            if (brg) {
                // dB = A^T * G
                Tensor& gb = t.node(bi).grad;
                const Tensor& av2 = t.node(ai).value;
                for (std::size_t i = 0; i < r; ++i) {
                    const double* arow = av2.raw() + i * k;
                    const double* grow = g.raw() + i * c;
                    for (std::size_t p = 0; p < k; ++p) {
                        const double aip = arow[p];
                        double* gbrow = gb.raw() + p * c;
                        for (std::size_t j = 0; j < c; ++j) gbrow[j] += aip * grow[j];
                    }
                }
            }
        };
    }
    return o;
}

Var Tape::affine(Var x, Var w, Var b) {
    check_owned(x, "affine");
    check_owned(w, "affine");
    check_owned(b, "affine");
    const Tensor& xv = value(x);
    const Tensor& wv = value(w);
    const Tensor& bv = value(b);
    if (xv.rank() != 2 || wv.rank() != 2 || xv.cols() != wv.rows()) {
        throw InvalidArgument("affine: shape mismatch " + xv.shape_str() + " vs " + wv.shape_str());
    }
    if (bv.rank() != 1 || bv.size() != wv.cols()) {
        throw InvalidArgument("affine: bias shape " + bv.shape_str() + " does not match weight " +
                              wv.shape_str());
    }
    Var mm = matmul(x, w);
    return add(mm, b);
}

Var Tape::activate(Var x, Activation kind) {
    check_owned(x, "activate");
    Tensor out = value(x);
    if (kind == Activation::Relu) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
    }
    const bool xrg = requires_grad(x);
    Var o = push(std::move(out), xrg, nullptr);
    if (xrg) {
        const auto oi = o.id, xi = x.id;
        node(oi).back = [oi, xi, kind](Tape& t) {
            const Tensor& g = t.node(oi).grad;
            const Tensor& ov = t.node(oi).value;
            const Tensor& xv2 = t.node(xi).value;
            Tensor& gx = t.node(xi).grad;
            if (kind == Activation::Relu) {
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (xv2[i] > 0.0) gx[i] += g[i];
            } else {
                for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - ov[i] * ov[i]);
            }
        };
    }
    return o;
}

Var Tape::exp(Var x) {
    check_owned(x, "exp");
    Tensor out = value(x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(out[i]);
    const bool xrg = requires_grad(x);
    Var o = push(std::move(out), xrg, nullptr);
    if (xrg) {
        const auto oi = o.id, xi = x.id;
        node(oi).back = [oi, xi](Tape& t) {
            const Tensor& g = t.node(oi).grad;
            const Tensor& ov = t.node(oi).value;
            Tensor& gx = t.node(xi).grad;
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * ov[i];
        };
    }
    return o;
}

Var Tape::log_clamped(Var x, double lo) {
    check_owned(x, "log_clamped");
    const Tensor& xv = value(x);
    Tensor out = xv;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(std::max(out[i], lo));
    const bool xrg = requires_grad(x);
    Var o = push(std::move(out), xrg, nullptr);
    if (xrg) {
        const auto oi = o.id, xi = x.id;
        node(oi).back = [oi, xi, lo](Tape& t) {
            const Tensor& g = t.node(oi).grad;
            const Tensor& xv2 = t.node(xi).value;
            Tensor& gx = t.node(xi).grad;
            for (std::size_t i = 0; i < g.size(); ++i)
                if (xv2[i] > lo) gx[i] += g[i] / xv2[i];
        };
    }
    return o;
}

Var Tape::clamp(Var x, double lo, double hi) {
    check_owned(x, "clamp");
    if (!(lo < hi)) throw InvalidArgument("clamp: lo must be below hi");
    Tensor out = value(x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(std::max(out[i], lo), hi);
    const bool xrg = requires_grad(x);
    Var o = push(std::move(out), xrg, nullptr);
    if (xrg) {
        const auto oi = o.id, xi = x.id;
        node(oi).back = [oi, xi, lo, hi](Tape& t) {
            const Tensor& g = t.node(oi).grad;
            const Tensor& xv2 = t.node(xi).value;
            Tensor& gx = t.node(xi).grad;
            for (std::size_t i = 0; i < g.size(); ++i)
                if (xv2[i] > lo && xv2[i] < hi) gx[i] += g[i];
        };
    }
    return o;
}

namespace {

void check_logits(const Tensor& v, const char* op) {
    if (v.rank() != 2) throw InvalidArgument(std::string(op) + ": rank-2 logits required, got " + v.shape_str());
    if (v.cols() < 2) throw InvalidArgument(std::string(op) + ": at least 2 classes required");
    if (!v.all_finite()) throw NumericError(std::string(op) + ": non-finite logits");
}

} // namespace

Var Tape::softmax(Var logits) {
    check_owned(logits, "softmax");
    const Tensor& xv = value(logits);
    check_logits(xv, "softmax");
    const std::size_t r = xv.rows(), c = xv.cols();
    Tensor out = Tensor::zeros({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = xv.raw() + i * c;
        double m = row[0];
        for (std::size_t j = 1; j < c; ++j) m = std::max(m, row[j]);
        double sum = 0.0;
        double* orow = out.raw() + i * c;
        for (std::size_t j = 0; j < c; ++j) {
            orow[j] = std::exp(row[j] - m);
            sum += orow[j];
        }
        for (std::size_t j = 0; j < c; ++j) orow[j] /= sum;
    }
    const bool xrg = requires_grad(logits);
    Var o = push(std::move(out), xrg, nullptr);
    if (xrg) {
        const auto oi = o.id, xi = logits.id;
        node(oi).back = [oi, xi, r, c](Tape& t) {
            // dx_i = p_i * (g_i - <g, p>) per row
            const Tensor& g = t.node(oi).grad;
            const Tensor& p = t.node(oi).value;
            Tensor& gx = t.node(xi).grad;
            for (std::size_t i = 0; i < r; ++i) {
                const double* grow = g.raw() + i * c;
                const double* prow = p.raw() + i * c;
                double dot = 0.0;
                for (std::size_t j = 0; j < c; ++j) dot += grow[j] * prow[j];
                double* gxrow = gx.raw() + i * c;
                for (std::size_t j = 0; j < c; ++j) gxrow[j] += prow[j] * (grow[j] - dot);
            }
        };
    }
    return o;
}

Var Tape::log_softmax(Var logits) {
    check_owned(logits, "log_softmax");
    const Tensor& xv = value(logits);
    check_logits(xv, "log_softmax");
    const std::size_t r = xv.rows(), c = xv.cols();
    Tensor out = Tensor::zeros({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = xv.raw() + i * c;
        double m = row[0];
        for (std::size_t j = 1; j < c; ++j) m = std::max(m, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) sum += std::exp(row[j] - m);
        const double lse = m + std::log(sum);
        double* orow = out.raw() + i * c;
        for (std::size_t j = 0; j < c; ++j) orow[j] = row[j] - lse;
    }
    const bool xrg = requires_grad(logits);
    Var o = push(std::move(out), xrg, nullptr);
    if (xrg) {
        const auto oi = o.id, xi = logits.id;
        node(oi).back = [oi, xi, r, c](Tape& t) {
            // dx_j = g_j - softmax_j * sum_k g_k per row
            const Tensor& g = t.node(oi).grad;
            const Tensor& lp = t.node(oi).value;
            Tensor& gx = t.node(xi).grad;
            for (std::size_t i = 0; i < r; ++i) {
                const double* grow = g.raw() + i * c;
                const double* lprow = lp.raw() + i * c;
                double gsum = 0.0;
                for (std::size_t j = 0; j < c; ++j) gsum += grow[j];
                double* gxrow = gx.raw() + i * c;
                for (std::size_t j = 0; j < c; ++j) gxrow[j] += grow[j] - std::exp(lprow[j]) * gsum;
            }
        };
    }
    return o;
}

Var Tape::reduce(Var x, ReduceOp op, int axis) {
    check_owned(x, "reduce");
    const Tensor& xv = value(x);
    if (axis != -1 && axis != 0 && axis != 1) {
        throw InvalidArgument("reduce: invalid axis " + std::to_string(axis));
    }
    if (axis == 1 && xv.rank() != 2) {
        throw InvalidArgument("reduce: axis 1 requires rank-2 input, got " + xv.shape_str());
    }
    if (axis == 0 && xv.rank() == 0) {
        throw InvalidArgument("reduce: axis 0 requires rank >= 1 input");
    }

    Tensor out;
    double inv = 1.0;
    if (axis == -1 || xv.rank() <= 1) {
        // full reduction to a scalar
        double acc = 0.0;
        for (std::size_t i = 0; i < xv.size(); ++i) acc += xv[i];
        if (op == ReduceOp::Mean && xv.size() > 0) {
            acc /= static_cast<double>(xv.size());
            inv = 1.0 / static_cast<double>(xv.size());
        }
        out = Tensor::scalar(acc);
        axis = -1;
    } else if (axis == 0) {
        const std::size_t r = xv.rows(), c = xv.cols();
        out = Tensor::zeros({c});
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) out[j] += xv.raw()[i * c + j];
        if (op == ReduceOp::Mean) {
            for (std::size_t j = 0; j < c; ++j) out[j] /= static_cast<double>(r);
            inv = 1.0 / static_cast<double>(r);
        }
    } else {
        const std::size_t r = xv.rows(), c = xv.cols();
        out = Tensor::zeros({r});
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) out[i] += xv.raw()[i * c + j];
        if (op == ReduceOp::Mean) {
            for (std::size_t i = 0; i < r; ++i) out[i] /= static_cast<double>(c);
            inv = 1.0 / static_cast<double>(c);
        }
    }

    const bool xrg = requires_grad(x);
    Var o = push(std::move(out), xrg, nullptr);
    if (xrg) {
        const auto oi = o.id, xi = x.id;
        const double w = (op == ReduceOp::Mean) ? inv : 1.0;
        node(oi).back = [oi, xi, axis, w](Tape& t) {
            const Tensor& g = t.node(oi).grad;
            const Tensor& xv2 = t.node(xi).value;
            Tensor& gx = t.node(xi).grad;
            if (axis == -1) {
                const double gv = g[0] * w;
                for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gv;
            } else if (axis == 0) {
                const std::size_t c = xv2.cols(), r = xv2.rows();
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) gx.raw()[i * c + j] += g[j] * w;
            } else {
                const std::size_t c = xv2.cols(), r = xv2.rows();
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) gx.raw()[i * c + j] += g[i] * w;
            }
        };
    }
    return o;
}

Var Tape::pick(Var m, std::vector<std::size_t> idx) {
    check_owned(m, "pick");
    const Tensor& mv = value(m);
    if (mv.rank() != 2) throw InvalidArgument("pick: rank-2 input required, got " + mv.shape_str());
    const std::size_t r = mv.rows(), c = mv.cols();
    if (idx.size() != r) {
        throw InvalidArgument("pick: index count " + std::to_string(idx.size()) +
                              " does not match row count " + std::to_string(r));
    }
    Tensor out = Tensor::zeros({r});
    for (std::size_t i = 0; i < r; ++i) {
        if (idx[i] >= c) throw InvalidArgument("pick: index out of range at row " + std::to_string(i));
        out[i] = mv.raw()[i * c + idx[i]];
    }
    const bool mrg = requires_grad(m);
    Var o = push(std::move(out), mrg, nullptr);
    if (mrg) {
        const auto oi = o.id, mi = m.id;
        node(oi).back = [oi, mi, idx = std::move(idx), c](Tape& t) {
            const Tensor& g = t.node(oi).grad;
            Tensor& gm = t.node(mi).grad;
            for (std::size_t i = 0; i < g.size(); ++i) gm.raw()[i * c + idx[i]] += g[i];
        };
    }
    return o;
}

Var Tape::detach(Var x) {
    check_owned(x, "detach");
    return push(value(x), false, nullptr);
}

void Tape::backward(Var root, double seed) {
    check_owned(root, "backward");
    Node& rn = node(root.id);
    if (rn.value.size() != 1) {
        throw InvalidArgument("backward: loss must be scalar, got shape " + rn.value.shape_str());
    }
    if (!rn.requires_grad) return; // constant objective, nothing to do
    zero_grad();
    rn.grad[0] = seed;
    for (std::uint32_t i = root.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.requires_grad && n.back) n.back(*this);
    }
}

void Tape::zero_grad() {
    for (Node& n : nodes_) {
        if (n.requires_grad) n.grad.fill(0.0);
    }
}

Var operator+(Var a, Var b) {
    if (!a.tape || a.tape != b.tape) throw InvalidArgument("operator+: operands on different tapes");
    return a.tape->add(a, b);
}

Var operator-(Var a, Var b) {
    if (!a.tape || a.tape != b.tape) throw InvalidArgument("operator-: operands on different tapes");
    return a.tape->sub(a, b);
}

Var operator*(Var a, Var b) {
    if (!a.tape || a.tape != b.tape) throw InvalidArgument("operator*: operands on different tapes");
    return a.tape->mul(a, b);
}

Var operator*(double k, Var a) {
    if (!a.tape) throw InvalidArgument("operator*: detached operand");
    return a.tape->scale(a, k);
}

double grad_check(const std::function<double()>& forward,
                  const std::function<std::vector<Tensor>()>& analytic,
                  const std::vector<Tensor*>& params, double eps) {
    if (!(eps > 0.0 && eps <= 1e-2)) {
        throw InvalidArgument("grad_check: eps must lie in (0, 1e-2]");
    }
    const double f1 = forward();
    const double f2 = forward();
    if (f1 != f2) {
        throw NumericError("grad_check: forward pass is not deterministic (" + std::to_string(f1) +
                           " vs " + std::to_string(f2) + "); freeze all noise inputs");
    }

    const std::vector<Tensor> grads = analytic();
    if (grads.size() != params.size()) {
        throw InvalidArgument("grad_check: analytic gradient count does not match parameter count");
    }

    double max_rel = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& param = *params[p];
        if (!grads[p].same_shape(param)) {
            throw InvalidArgument("grad_check: gradient shape " + grads[p].shape_str() +
                                  " does not match parameter shape " + param.shape_str());
        }
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double saved = param[i];
            param[i] = saved + eps;
            const double fp = forward();
            param[i] = saved - eps;
            const double fm = forward();
            param[i] = saved;
            const double fd = (fp - fm) / (2.0 * eps);
            const double a = grads[p][i];
            const double rel = std::abs(a - fd) / std::max(1.0, std::abs(a));
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

} // namespace fairdisc::ad
