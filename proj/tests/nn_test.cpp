#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "fairdisc/errors.hpp"
#include "fairdisc/nn.hpp"

using namespace fairdisc;
using ad::Tensor;
using ad::Var;

namespace {

nn::MLPSpec spec_of(std::size_t in, std::vector<std::size_t> hidden, std::size_t out,
                    ad::Activation act = ad::Activation::Relu) {
    nn::MLPSpec s;
    s.input_dim = in;
    s.hidden = std::move(hidden);
    s.output_dim = out;
    s.activation = act;
    return s;
}

} // namespace

TEST_CASE("initialization: uniform +-1/sqrt(fan_in) weights, zero biases, seeded") {
    nn::ParamStore store;
    Rng rng(21);
    nn::MLP mlp = nn::MLP::create(store, "net", nn::Partition::Trunk, spec_of(9, {16}, 4), rng);
    REQUIRE(mlp.layers().size() == 2);
    const double bound0 = 1.0 / std::sqrt(9.0), bound1 = 1.0 / std::sqrt(16.0);
    for (std::size_t i = 0; i < mlp.layers()[0].first->value.size(); ++i) {
        CHECK(std::abs(mlp.layers()[0].first->value[i]) <= bound0);
    }
    for (std::size_t i = 0; i < mlp.layers()[1].first->value.size(); ++i)
        CHECK(std::abs(mlp.layers()[1].first->value[i]) <= bound1);
    for (auto& [w, b] : mlp.layers())
        for (std::size_t i = 0; i < b->value.size(); ++i) CHECK(b->value[i] == 0.0);

    // same seed reproduces the same weights
    nn::ParamStore store2;
    Rng rng2(21);
    nn::MLP mlp2 = nn::MLP::create(store2, "net", nn::Partition::Trunk, spec_of(9, {16}, 4), rng2);
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t i = 0; i < mlp.layers()[l].first->value.size(); ++i)
            CHECK(mlp.layers()[l].first->value[i] == mlp2.layers()[l].first->value[i]);
}

TEST_CASE("param store partitions are disjoint and cover everything") {
    nn::ParamStore store;
    Rng rng(3);
    nn::MLP::create(store, "trunk", nn::Partition::Trunk, spec_of(4, {8}, 8), rng);
    nn::MLP::create(store, "head", nn::Partition::TargetBranch, spec_of(8, {}, 2), rng);
    nn::MLP::create(store, "disc", nn::Partition::TargetDisc, spec_of(2, {8, 8}, 2), rng);

    std::size_t covered = 0;
    for (nn::Partition p : {nn::Partition::Trunk, nn::Partition::TargetBranch,
                            nn::Partition::SensitiveBranch, nn::Partition::TargetDisc,
                            nn::Partition::SensitiveDisc}) {
        for (nn::Param* q : store.in_partition(p)) {
            CHECK(q->partition == p);
            covered += 1;
        }
    }
    CHECK(covered == store.size());
    CHECK(store.all().size() == store.size());
    CHECK(store.size() == 12); // 2+1+3 layers, a weight and a bias each
}

TEST_CASE("zero-hidden spec is exactly an affine map") {
    nn::ParamStore store;
    Rng rng(5);
    nn::MLP mlp = nn::MLP::create(store, "aff", nn::Partition::Trunk, spec_of(3, {}, 2), rng);
    const Tensor x = Tensor::matrix({{0.2, -1.0, 0.5}, {1.5, 0.1, -0.3}});

    ad::Tape tape;
    nn::TapeBinding bound(tape, store.all());
    Var y = mlp.forward(tape, bound, tape.leaf(x));

    Var direct = tape.affine(tape.leaf(x), bound[*mlp.layers()[0].first],
                             bound[*mlp.layers()[0].second]);
    for (std::size_t i = 0; i < y.value().size(); ++i)
        CHECK(y.value()[i] == direct.value()[i]);

    // plain forward agrees with the graph forward
    const Tensor plain = mlp.forward_plain(x);
    for (std::size_t i = 0; i < plain.size(); ++i) CHECK(plain[i] == y.value()[i]);
}

TEST_CASE("one-hidden-layer relu net with hand-set weights") {
    nn::ParamStore store;
    Rng rng(1);
    nn::MLP mlp = nn::MLP::create(store, "net", nn::Partition::Trunk,
                                  spec_of(2, {2}, 1, ad::Activation::Relu), rng);
    // layer 0: W = [[1, -1], [2, 0]], b = [0.5, -0.5]
    nn::Param* w0 = mlp.layers()[0].first;
    nn::Param* b0 = mlp.layers()[0].second;
    w0->value = Tensor::matrix({{1, -1}, {2, 0}});
    b0->value = Tensor::vec({0.5, -0.5});
    // layer 1: W = [[1], [3]], b = [0.25]
    mlp.layers()[1].first->value = Tensor::matrix({{1}, {3}});
    mlp.layers()[1].second->value = Tensor::vec({0.25});

    // x=[1,0]: pre = [1.5, -1.5], relu = [1.5, 0], out = 1.5*1 + 0*3 + 0.25 = 1.75
    const Tensor out = mlp.forward_plain(Tensor::matrix({{1, 0}}));
    CHECK(out.at(0, 0) == doctest::Approx(1.75).epsilon(1e-15));
}

TEST_CASE("mlp spec validation") {
    CHECK_THROWS_AS(spec_of(0, {}, 2).validate(), ConfigError);
    CHECK_THROWS_AS(spec_of(2, {0}, 2).validate(), ConfigError);
    CHECK_THROWS_AS(spec_of(2, {}, 0).validate(), ConfigError);
    CHECK_NOTHROW(spec_of(2, {4, 4}, 2).validate());
}

TEST_CASE("cross entropy from logits") {
    ad::Tape tape;
    SUBCASE("matches -ln p(true class)") {
        // softmax([ln 0.8, ln 0.2]) = [0.8, 0.2]
        Var logits = tape.leaf(Tensor::matrix({{std::log(0.8), std::log(0.2)}}));
        Var ce = nn::cross_entropy_mean(tape, logits, {0});
        CHECK(ce.value()[0] == doctest::Approx(0.22314355131420976).epsilon(1e-12));
    }
    SUBCASE("uniform prediction costs ln 2") {
        Var ce = nn::cross_entropy_mean(tape, tape.leaf(Tensor::matrix({{0.0, 0.0}})), {1});
        CHECK(ce.value()[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("confident correct prediction costs about zero") {
        Var ce = nn::cross_entropy_mean(tape, tape.leaf(Tensor::matrix({{40.0, 0.0}})), {0});
        CHECK(ce.value()[0] == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("batch mean over two rows") {
        Var logits = tape.leaf(Tensor::matrix({{std::log(0.8), std::log(0.2)},
                                               {0.0, 0.0}}));
        Var ce = nn::cross_entropy_mean(tape, logits, {0, 1});
        CHECK(ce.value()[0] ==
              doctest::Approx(0.5 * (0.22314355131420976 + std::log(2.0))).epsilon(1e-12));
    }
}

TEST_CASE("tape binding harvests weighted gradients into param buffers") {
    nn::ParamStore store;
    Rng rng(8);
    nn::MLP mlp = nn::MLP::create(store, "lin", nn::Partition::TargetBranch, spec_of(2, {}, 2),
                                  rng);
    const Tensor x = Tensor::matrix({{1.0, 2.0}});

    ad::Tape tape;
    nn::TapeBinding bound(tape, store.all());
    Var loss = tape.reduce(mlp.forward(tape, bound, tape.leaf(x)), ad::ReduceOp::Sum, -1);
    tape.backward(loss);
    bound.harvest(2.0); // doubled contribution

    nn::Param* w = mlp.layers()[0].first;
    nn::Param* b = mlp.layers()[0].second;
    CHECK(w->grad_valid);
    // d loss / d W[k,j] = x[k] summed over the batch of one
    CHECK(w->grad.at(0, 0) == doctest::Approx(2.0 * 1.0));
    CHECK(w->grad.at(1, 1) == doctest::Approx(2.0 * 2.0));
    CHECK(b->grad[0] == doctest::Approx(2.0));

    SUBCASE("harvest accumulates across calls") {
        bound.harvest(1.0);
        CHECK(w->grad.at(0, 0) == doctest::Approx(3.0));
    }
    SUBCASE("masked harvest skips the masked partition") {
        store.zero_grads();
        bound.harvest_masked(1.0,
                             [](nn::Partition p) { return p == nn::Partition::TargetBranch; });
        CHECK(w->grad.at(0, 0) == 0.0);
        CHECK(w->grad_valid); // still marked populated: the zero is intentional
    }
}

TEST_CASE("adam first step matches the hand-evaluated recurrences") {
    nn::ParamStore store;
    nn::Param& p = store.create("w", nn::Partition::Trunk, Tensor::vec({1.0, -2.0}));
    p.grad = Tensor::vec({1.0, 1.0});
    p.grad_valid = true;

    nn::AdamConfig cfg;
    cfg.lr = 0.1;
    nn::Adam adam({&p}, cfg);
    adam.step();
    // t=1: m_hat = g, v_hat = g^2, update = -lr * g/(|g| + eps) = -lr
    CHECK(p.value[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-7));
    CHECK(p.value[1] == doctest::Approx(-2.0 - 0.1).epsilon(1e-7));
    CHECK(adam.steps() == 1);
    CHECK_FALSE(p.grad_valid); // consumed
}

TEST_CASE("adam leaves parameters alone with zero gradient or zero lr") {
    nn::ParamStore store;
    nn::Param& p = store.create("w", nn::Partition::Trunk, Tensor::vec({0.7}));
    SUBCASE("zero gradient, zero decay") {
        p.grad = Tensor::vec({0.0});
        p.grad_valid = true;
        nn::Adam adam({&p}, {});
        adam.step();
        CHECK(p.value[0] == 0.7);
    }
    SUBCASE("zero lr is bit-identical even with gradients") {
        p.grad = Tensor::vec({123.0});
        p.grad_valid = true;
        nn::AdamConfig cfg;
        cfg.lr = 0.0;
        nn::Adam adam({&p}, cfg);
        adam.step();
        CHECK(p.value[0] == 0.7);
    }
}

TEST_CASE("coupled weight decay shrinks parameters with zero loss gradient") {
    for (double w0 : {1.0, -1.0}) {
        nn::ParamStore store;
        nn::Param& p = store.create("w", nn::Partition::Trunk, Tensor::vec({w0}));
        p.grad = Tensor::vec({0.0});
        p.grad_valid = true;
        nn::AdamConfig cfg;
        cfg.lr = 0.01;
        cfg.weight_decay = 5e-4;
        nn::Adam adam({&p}, cfg);
        adam.step();
        CHECK(std::abs(p.value[0]) < std::abs(w0));
        CHECK(p.value[0] * w0 > 0.0); // same sign: shrinks toward zero
    }
}

TEST_CASE("decoupled decay multiplies the parameter directly") {
    nn::ParamStore store;
    nn::Param& p = store.create("w", nn::Partition::Trunk, Tensor::vec({2.0}));
    p.grad = Tensor::vec({0.0});
    p.grad_valid = true;
    nn::AdamConfig cfg;
    cfg.lr = 0.5;
    cfg.weight_decay = 0.1;
    cfg.decoupled_decay = true;
    nn::Adam adam({&p}, cfg);
    adam.step();
    // zero gradient: moments stay zero, only the decay term acts
    CHECK(p.value[0] == doctest::Approx(2.0 * (1.0 - 0.5 * 0.1)).epsilon(1e-12));
}

TEST_CASE("adam refuses to step on a stale gradient") {
    nn::ParamStore store;
    nn::Param& p = store.create("branch.w0", nn::Partition::Trunk, Tensor::vec({1.0}));
    nn::Adam adam({&p}, {});
    CHECK_THROWS_WITH_AS(adam.step(), doctest::Contains("branch.w0"), InvalidArgument);
}

TEST_CASE("duplicate parameter names are rejected") {
    nn::ParamStore store;
    store.create("w", nn::Partition::Trunk, Tensor::vec({1.0}));
    CHECK_THROWS_AS(store.create("w", nn::Partition::Trunk, Tensor::vec({1.0})),
                    InvalidArgument);
}
