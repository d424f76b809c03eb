#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>

#include "rdvla/model.hpp"

using namespace rdvla;

namespace {

EncoderConfig small_ecfg() {
    EncoderConfig e;
    e.d_model = 32;
    e.layers = 3;
    e.heads = 4;
    e.n_latent = 4;
    e.n_entity_max = 8;
    e.mid_layer = 2;
    return e;
}

HeadConfig small_hcfg() {
    HeadConfig h;
    h.k_queries = 8;
    h.d_model = 32;
    h.heads = 4;
    h.max_iters = 32;
    h.horizon = 8;
    h.action_dim = 3;
    return h;
}

Model small_model(uint64_t seed = 1) {
    Rng rng(seed);
    return Model::build(small_ecfg(), small_hcfg(), rng);
}

bool tensors_equal(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    return std::memcmp(a.data(), b.data(), a.numel() * sizeof(real_t)) == 0;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        m = std::max(m, std::fabs(double(a.data()[i]) - double(b.data()[i])));
    }
    return m;
}

double grad_norm(const Tensor& t) {
    if (!t.has_grad()) return 0;
    double s = 0;
    for (std::size_t i = 0; i < t.numel(); ++i) s += double(t.grad_data()[i]) * t.grad_data()[i];
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("config invariants are enforced") {
    EncoderConfig e = small_ecfg();
    e.mid_layer = 3;  // must be < layers
    CHECK_THROWS_AS(e.validate(), ConfigError);
    e = small_ecfg();
    e.heads = 5;
    CHECK_THROWS_AS(e.validate(), ConfigError);

    HeadConfig h = small_hcfg();
    h.horizon = 6;  // K != H
    CHECK_THROWS_AS(h.validate(), ConfigError);
    h = small_hcfg();
    h.trunc = 0;
    CHECK_THROWS_AS(h.validate(), ConfigError);
    h = small_hcfg();
    h.max_iters = 0;
    CHECK_THROWS_AS(h.validate(), ConfigError);
}

TEST_CASE("embed_observation: entity counts and shapes") {
    Model m = small_model();
    SimState t0 = reset(0, 1);
    Tensor e0 = m.encoder.embed_observation(t0.observation());
    CHECK(e0.rows() == 2);  // agent + goal
    CHECK(e0.cols() == 32);

    SimState t2 = reset(2, 1);
    Tensor e2 = m.encoder.embed_observation(t2.observation());
    CHECK(e2.rows() == 4);

    SimObservation too_many = t2.observation();
    while (too_many.entities.size() <= m.ecfg.n_entity_max) {
        too_many.entities.push_back(too_many.entities.back());
    }
    CHECK_THROWS_AS(m.encoder.embed_observation(too_many), ConfigError);
}

TEST_CASE("embed_observation is permutation-equivariant") {
    Model m = small_model();
    SimObservation obs = reset(2, 3).observation();
    Tensor toks = m.encoder.embed_observation(obs);
    SimObservation perm = obs;
    std::swap(perm.entities[0], perm.entities[2]);
    std::swap(perm.entities[1], perm.entities[3]);
    Tensor ptoks = m.encoder.embed_observation(perm);
    for (std::size_t c = 0; c < toks.cols(); ++c) {
        CHECK(toks.at(0, c) == ptoks.at(2, c));
        CHECK(toks.at(1, c) == ptoks.at(3, c));
        CHECK(toks.at(2, c) == ptoks.at(0, c));
        CHECK(toks.at(3, c) == ptoks.at(1, c));
    }
}

TEST_CASE("encode: shape contract and exact partition") {
    Model m = small_model();
    SimState st = reset(2, 5);
    ContextBundle ctx = m.encode_observation(st.observation(), st.proprio());
    const std::size_t e = 4, mtok = m.ecfg.n_latent, d = m.ecfg.d_model;
    CHECK(ctx.mid_feats.rows() == e + mtok);
    CHECK(ctx.mid_feats.cols() == d);
    CHECK(ctx.final_feats.rows() == e + mtok);
    CHECK(ctx.final_vis.rows() == e);
    CHECK(ctx.final_lat.rows() == mtok);
    CHECK(ctx.proprio_tok.rows() == 1);
    CHECK(ctx.proprio_tok.cols() == d);

    // concat(final_vis, final_lat) == final_feats, bitwise.
    Tensor rejoined = concat_rows({ctx.final_vis, ctx.final_lat});
    CHECK(tensors_equal(rejoined, ctx.final_feats));
}

TEST_CASE("encode with zeroed blocks is the identity up to the tap point") {
    Model m = small_model();
    for (auto& [name, t] : m.params.items_mut()) {
        if (name.rfind("encoder.block", 0) == 0) t.fill(0);
    }
    SimState st = reset(1, 7);
    Tensor toks = m.encoder.embed_observation(st.observation());
    Tensor input = m.encoder.input_tokens(toks);
    ContextBundle ctx = m.encoder.encode(toks, st.proprio());
    CHECK(max_abs_diff(ctx.mid_feats, input) == 0.0);
}

TEST_CASE("latent tokens are shared parameters appended to every encoding") {
    Model m = small_model();
    // Zero the blocks so the tap point exposes the raw input tokens.
    for (auto& [name, t] : m.params.items_mut()) {
        if (name.rfind("encoder.block", 0) == 0) t.fill(0);
    }
    SimState a = reset(0, 1), b = reset(2, 9);
    ContextBundle ca = m.encoder.encode(m.encoder.embed_observation(a.observation()), a.proprio());
    ContextBundle cb = m.encoder.encode(m.encoder.embed_observation(b.observation()), b.proprio());
    const std::size_t ea = 2, eb = 4;
    for (std::size_t i = 0; i < m.ecfg.n_latent; ++i) {
        for (std::size_t c = 0; c < m.ecfg.d_model; ++c) {
            CHECK(ca.mid_feats.at(ea + i, c) == cb.mid_feats.at(eb + i, c));
            CHECK(ca.mid_feats.at(ea + i, c) == m.encoder.latent_tokens.at(i, c));
        }
    }
}

TEST_CASE("gradient reaches the latent embeddings through final_lat") {
    Model m = small_model();
    SimState st = reset(2, 2);
    m.params.zero_grads();
    {
        GradTape tape;
        ContextBundle ctx = m.encode_observation(st.observation(), st.proprio());
        backward(sum_all(mul(ctx.final_lat, ctx.final_lat)));
    }
    CHECK(grad_norm(m.encoder.latent_tokens) > 0);
}

TEST_CASE("prelude: shape, sensitivity to the observation, gate-off isolation") {
    Model m = small_model(11);
    m.params.find("head.prelude.gate")->fill(real_t(0.5));  // open the trained gate
    SimState s1 = reset(2, 1), s2 = reset(2, 2);
    ContextBundle c1 = m.encode_observation(s1.observation(), s1.proprio());
    ContextBundle c2 = m.encode_observation(s2.observation(), s2.proprio());
    Tensor p1 = m.head.prelude(c1);
    CHECK(p1.rows() == m.hcfg.k_queries);
    CHECK(p1.cols() == m.hcfg.d_model);

    // Random weights, different observations: not a constant map.
    Tensor p2 = m.head.prelude(c2);
    CHECK(max_abs_diff(p1, p2) > 1e-8);

    // Gate off: the prelude sees only the queries.
    m.params.find("head.prelude.gate")->fill(0);  // tanh(0) = 0 (also the init)
    Tensor q1 = m.head.prelude(c1);
    Tensor q2 = m.head.prelude(c2);
    CHECK(max_abs_diff(q1, q2) == 0.0);
}

TEST_CASE("init_scratchpad: bounds, determinism, spread") {
    Model m = small_model();
    const double sd = m.hcfg.scratch_std();
    Rng r1(5), r2(5);
    Tensor a = m.head.init_scratchpad(r1);
    Tensor b = m.head.init_scratchpad(r2);
    CHECK(tensors_equal(a, b));
    for (std::size_t i = 0; i < a.numel(); ++i) {
        CHECK(std::fabs(double(a.data()[i])) <= m.hcfg.trunc * sd);
    }
    // Empirical std over many draws within 2% of the nominal scale.
    double s2 = 0;
    std::size_t n = 0;
    Rng rs(17);
    for (int rep = 0; rep < 500; ++rep) {
        Tensor s = m.head.init_scratchpad(rs);
        for (std::size_t i = 0; i < s.numel(); ++i) s2 += double(s.data()[i]) * s.data()[i];
        n += s.numel();
    }
    CHECK(std::sqrt(s2 / double(n)) == doctest::Approx(sd).epsilon(0.02));
}

TEST_CASE("inject: block-identity adapter reduces to RMSNorm of s_prev") {
    Model m = small_model();
    const std::size_t d = m.hcfg.d_model;
    // W_adapt = [I ; 0] so [s_prev ; s_pre] W = s_prev.
    Tensor* w = m.params.find("head.w_adapt");
    REQUIRE(w != nullptr);
    w->fill(0);
    for (std::size_t i = 0; i < d; ++i) w->set(i, i, 1);
    m.params.find("head.gamma_adapt")->fill(1);

    Rng rng(3);
    Tensor s_prev = Tensor::randn(m.hcfg.k_queries, d, rng, 1.0);
    Tensor s_pre = Tensor::randn(m.hcfg.k_queries, d, rng, 1.0);
    Tensor x = m.head.inject(s_prev, s_pre);
    Tensor expect = rms_norm(s_prev, m.head.adapt_norm.gain, m.head.adapt_norm.eps);
    CHECK(max_abs_diff(x, expect) == 0.0);

    // Unit gain: every output row has RMS 1 (up to eps).
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double ms = 0;
        for (std::size_t c = 0; c < d; ++c) ms += double(x.at(r, c)) * x.at(r, c);
        CHECK(std::sqrt(ms / double(d)) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("core_step: iteration counter, budget, purity") {
    Model m = small_model();
    SimState st = reset(2, 4);
    ContextBundle ctx = m.encode_observation(st.observation(), st.proprio());
    Rng rng(9);
    ScratchpadState s0{m.head.init_scratchpad(rng), m.head.prelude(ctx), 0};
    ScratchpadState s1 = m.head.core_step(s0, ctx);
    CHECK(s1.iter == 1);
    ScratchpadState s2 = m.head.core_step(s1, ctx);
    CHECK(s2.iter == 2);

    // Repeating the two-step unroll from the same state is bit-identical.
    ScratchpadState r1 = m.head.core_step(s0, ctx);
    ScratchpadState r2 = m.head.core_step(r1, ctx);
    CHECK(tensors_equal(r2.s, s2.s));

    ScratchpadState capped = s0;
    capped.iter = static_cast<int>(m.hcfg.max_iters);
    CHECK_THROWS_AS(m.head.core_step(capped, ctx), BudgetError);
}

TEST_CASE("core gate at zero ignores the conditioning context") {
    Model m = small_model();
    m.params.find("head.core.gate")->fill(0);
    SimState sa = reset(2, 1), sb = reset(2, 2);
    ContextBundle ca = m.encode_observation(sa.observation(), sa.proprio());
    ContextBundle cb = m.encode_observation(sb.observation(), sb.proprio());
    Rng rng(13);
    Tensor s0 = m.head.init_scratchpad(rng);
    Tensor s_pre = m.head.init_scratchpad(rng);  // any fixed tensor; shared below
    ScratchpadState a{s0, s_pre, 0}, b{s0, s_pre, 0};
    Tensor out_a = m.head.core_step(a, ca).s;
    Tensor out_b = m.head.core_step(b, cb).s;
    CHECK(tensors_equal(out_a, out_b));
}

TEST_CASE("coda: shape, determinism, gradient reachability") {
    Model m = small_model(21);
    SimState st = reset(2, 6);
    Rng rng(31);
    ContextBundle ctx = m.encode_observation(st.observation(), st.proprio());
    ScratchpadState s{m.head.init_scratchpad(rng), m.head.prelude(ctx), 3};
    ActionChunk c1 = m.head.coda(s, ctx);
    CHECK(c1.actions.rows() == m.hcfg.horizon);
    CHECK(c1.actions.cols() == m.hcfg.action_dim);
    CHECK(c1.produced_at_iter == 3);
    ActionChunk c2 = m.head.coda(s, ctx);
    CHECK(tensors_equal(c1.actions, c2.actions));

    // One backward from a chunk MSE loss reaches every stage. Open the
    // cross-attention gates so the context path carries gradient too.
    m.params.find("head.prelude.gate")->fill(real_t(0.5));
    m.params.find("head.core.gate")->fill(real_t(0.5));
    m.params.find("head.coda.gate")->fill(real_t(0.5));
    m.params.zero_grads();
    {
        GradTape tape;
        ContextBundle tctx = m.encode_observation(st.observation(), st.proprio());
        Rng r2(31);
        ScratchpadState state{m.head.init_scratchpad(r2), m.head.prelude(tctx), 0};
        for (int k = 0; k < 3; ++k) state = m.head.core_step(state, tctx);
        ActionChunk chunk = m.head.coda(state, tctx);
        Tensor target = Tensor::full(m.hcfg.horizon, m.hcfg.action_dim, real_t(0.25));
        backward(mse(chunk.actions, target));
    }
    CHECK(grad_norm(*m.params.find("head.queries")) > 0);
    CHECK(grad_norm(*m.params.find("head.w_adapt")) > 0);
    CHECK(grad_norm(*m.params.find("head.core.self_attn.wq.w")) > 0);
    CHECK(grad_norm(*m.params.find("head.w_out.w")) > 0);
    CHECK(grad_norm(*m.params.find("encoder.latent_tokens")) > 0);
}

TEST_CASE("forward: unroll contract and intermediate consistency") {
    Model m = small_model(33);
    SimState st = reset(2, 8);
    ContextBundle ctx = m.encode_observation(st.observation(), st.proprio());

    Rng r1(7);
    auto one = m.head.forward(ctx, 1, r1, false);
    CHECK(one.size() == 1);
    CHECK(one[0].produced_at_iter == 1);

    Rng r2(7);
    auto inter = m.head.forward(ctx, 4, r2, true);
    CHECK(inter.size() == 4);
    Rng r3(7);
    auto last = m.head.forward(ctx, 4, r3, false);
    CHECK(tensors_equal(inter.back().actions, last[0].actions));

    Rng r4(7);
    CHECK_THROWS_AS(m.head.forward(ctx, 0, r4, false), BudgetError);
    CHECK_THROWS_AS(m.head.forward(ctx, static_cast<int>(m.hcfg.max_iters) + 1, r4, false),
                    BudgetError);
}

TEST_CASE("every intermediate state decodes to a finite chunk") {
    Model m = small_model(55);
    SimState st = reset(2, 10);
    ContextBundle ctx = m.encode_observation(st.observation(), st.proprio());
    Rng rng(5);
    auto chunks = m.head.forward(ctx, 16, rng, true);
    REQUIRE(chunks.size() == 16);
    for (const auto& c : chunks) CHECK(all_finite(c.actions));
}

TEST_CASE("weight tying: one parameter set drives every iteration") {
    Model m = small_model(66);
    SimState st = reset(2, 12);
    ContextBundle ctx = m.encode_observation(st.observation(), st.proprio());
    Rng r1(3);
    auto base = m.head.forward(ctx, 4, r1, true);

    // Perturb one core weight; every iteration's output must change.
    Tensor* w = m.params.find("head.core.mlp.fc1.w");
    REQUIRE(w != nullptr);
    w->data_mut()[0] += real_t(0.5);
    Rng r2(3);
    auto pert = m.head.forward(ctx, 4, r2, true);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(max_abs_diff(base[k].actions, pert[k].actions) > 0);
    }
}

TEST_CASE("seed determinism end-to-end") {
    Model m = small_model(77);
    SimState st = reset(1, 13);
    ContextBundle ctx = m.encode_observation(st.observation(), st.proprio());
    Rng r1(99), r2(99);
    auto a = m.head.forward(ctx, 6, r1, false);
    auto b = m.head.forward(ctx, 6, r2, false);
    CHECK(tensors_equal(a[0].actions, b[0].actions));
}

TEST_CASE("constant-memory inference: peak live allocation independent of depth") {
    Model m = small_model(88);
    SimState st = reset(2, 14);
    auto peak_at = [&](int r) {
        ContextBundle ctx = m.encode_observation(st.observation(), st.proprio());
        Rng rng(1);
        AllocStats::reset_peak();
        m.head.forward(ctx, r, rng, false);
        return AllocStats::peak_elems();
    };
    const long long p4 = peak_at(4);
    const long long p32 = peak_at(32);
    CHECK(double(p32) <= 1.1 * double(p4));
}
