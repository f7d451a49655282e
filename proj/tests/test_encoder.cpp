#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rep/dataset.hpp"
#include "rep/encoder.hpp"
#include "rep/gradcheck.hpp"

using namespace rep;

namespace {

using DReg = ParamRegistry<double>;

struct Setup {
    DReg reg;
    EncoderModel model;
};

Setup make_setup(EncoderConfig cfg, uint64_t seed = 11, int32_t vocab = 30) {
    Setup s;
    Rng rng(seed);
    VocabSizes sizes{vocab, vocab, vocab, vocab};
    s.model = register_encoder(s.reg, cfg, sizes, rng);
    return s;
}

EventIndices random_event(Rng& rng, int32_t vocab = 30, int64_t max_args = 6) {
    EventIndices e;
    e.verb = 2 + static_cast<int32_t>(rng.below(static_cast<uint64_t>(vocab - 2)));
    e.prot_role = 2 + static_cast<int32_t>(rng.below(static_cast<uint64_t>(vocab - 2)));
    int64_t n = static_cast<int64_t>(rng.below(static_cast<uint64_t>(max_args + 1)));
    for (int64_t j = 0; j < n; ++j)
        e.args.push_back({2 + static_cast<int32_t>(rng.below(static_cast<uint64_t>(vocab - 2))),
                          2 + static_cast<int32_t>(rng.below(static_cast<uint64_t>(vocab - 2))),
                          2 + static_cast<int32_t>(rng.below(static_cast<uint64_t>(vocab - 2)))});
    return e;
}

// Straight loop evaluation of the projection equations from raw parameters.
std::vector<double> oracle_project(const DReg& reg, const char* w1n, const char* w2n,
                                   const char* w3n, const char* bn, int32_t id_a,
                                   int32_t id_b, int32_t id_c, const char* ta,
                                   const char* tb, const char* tc) {
    auto row = [&](const char* table, int32_t id) {
        const auto& t = const_cast<DReg&>(reg).find(table)->value;
        int64_t d = t.shape[1];
        return std::vector<double>(t.data.begin() + id * d, t.data.begin() + (id + 1) * d);
    };
    auto matvec = [&](const char* wname, const std::vector<double>& x) {
        const auto& w = const_cast<DReg&>(reg).find(wname)->value;
        int64_t dw = w.shape[0], de = w.shape[1];
        std::vector<double> out(static_cast<size_t>(de), 0.0);
        for (int64_t i = 0; i < dw; ++i)
            for (int64_t j = 0; j < de; ++j)
                out[static_cast<size_t>(j)] +=
                    x[static_cast<size_t>(i)] * w.data[static_cast<size_t>(i * de + j)];
        return out;
    };
    auto a = matvec(w1n, row(ta, id_a));
    auto b = matvec(w2n, row(tb, id_b));
    std::vector<double> c(a.size(), 0.0);
    if (w3n) c = matvec(w3n, row(tc, id_c));
    const auto& bias = const_cast<DReg&>(reg).find(bn)->value;
    for (size_t j = 0; j < a.size(); ++j) a[j] += b[j] + c[j] + bias.data[j];
    return a;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("embed_event matches a hand-rolled matrix-vector oracle") {
    EncoderConfig cfg;
    cfg.d_w = 7;
    cfg.d_e = 8;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.d_ff = 16;
    auto s = make_setup(cfg);
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        EventIndices e = random_event(rng);
        auto [p, a] = embed_event(s.reg, s.model, e);

        auto p_want = oracle_project(s.reg, "enc.W1", "enc.W2", nullptr, "enc.b",
                                     e.verb, e.prot_role, 0, "enc.E_v", "enc.E_r",
                                     nullptr);
        CHECK(max_abs_diff(std::vector<double>(p.data.begin(), p.data.end()), p_want) <
              1e-6);

        for (size_t j = 0; j < e.args.size(); ++j) {
            auto want = oracle_project(s.reg, "enc.W1", "enc.W2", "enc.W3", "enc.b",
                                       e.args[j][0], e.args[j][1], e.args[j][2],
                                       "enc.E_r", "enc.E_w", "enc.E_t");
            std::vector<double> got(a.data.begin() + static_cast<int64_t>(j) * cfg.d_e,
                                    a.data.begin() + static_cast<int64_t>(j + 1) * cfg.d_e);
            CHECK(max_abs_diff(got, want) < 1e-6);
        }
    }
}

TEST_CASE("zero embeddings reduce the projections to the bias") {
    EncoderConfig cfg;
    cfg.d_w = 5;
    cfg.d_e = 6;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.d_ff = 8;
    auto s = make_setup(cfg);
    for (const char* table : {"enc.E_v", "enc.E_r", "enc.E_w", "enc.E_t"})
        for (auto& v : s.reg.find(table)->value.data) v = 0.0;
    for (auto& v : s.reg.find("enc.b")->value.data) v = 0.25;

    EventIndices e;
    e.verb = 3;
    e.prot_role = 4;
    e.args = {{5, 6, 7}, {8, 9, 10}};
    auto [p, a] = embed_event(s.reg, s.model, e);
    for (double v : p.data) CHECK(v == Catch::Approx(0.25));
    for (double v : a.data) CHECK(v == Catch::Approx(0.25));
}

TEST_CASE("argument-free event still embeds and encodes") {
    EncoderConfig cfg;
    cfg.d_w = 5;
    cfg.d_e = 8;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.d_ff = 8;
    auto s = make_setup(cfg);
    EventIndices e;
    e.verb = 2;
    e.prot_role = 3;

    auto [p, a] = embed_event(s.reg, s.model, e);
    CHECK(a.numel() == 0);
    CHECK(p.numel() == 8);

    auto rich = encode_event_rich(s.reg, s.model, e);
    CHECK(rich.numel() == 8);
    for (double v : rich.data) CHECK(std::isfinite(v));

    auto fus = encode_event_fusion(s.reg, s.model, e);
    // with no arguments the fusion encoder is tanh(p)
    for (size_t i = 0; i < fus.data.size(); ++i)
        CHECK(fus.data[i] == Catch::Approx(std::tanh(p.data[i])).epsilon(1e-12));
}

TEST_CASE("single unmasked position attends to itself with weight one") {
    EncoderConfig cfg;
    cfg.d_w = 5;
    cfg.d_e = 8;
    cfg.layers = 1;
    cfg.heads = 4;
    cfg.d_ff = 8;
    auto s = make_setup(cfg);
    EventIndices e;
    e.verb = 2;
    e.prot_role = 3;  // no arguments: sequence length 1
    AttentionTrace<double> trace;
    encode_event_rich(s.reg, s.model, e, &trace);
    REQUIRE(trace.layers.size() == 1);
    REQUIRE(trace.seq_len == 1);
    for (double v : trace.layers[0].data) CHECK(v == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("identical rows produce identical attention rows") {
    EncoderConfig cfg;
    cfg.d_w = 5;
    cfg.d_e = 8;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.d_ff = 8;
    auto s = make_setup(cfg);
    EventIndices e;
    e.verb = 4;
    e.prot_role = 5;
    e.args = {{6, 7, 8}, {6, 7, 8}, {6, 7, 8}};  // identical argument slots
    AttentionTrace<double> trace;
    encode_event_rich(s.reg, s.model, e, &trace);
    const auto& m = trace.layers[0];
    int64_t t = trace.seq_len;
    for (int64_t h = 0; h < trace.heads; ++h)
        for (int64_t q = 1; q + 1 < t; ++q)
            for (int64_t c = 0; c < t; ++c)
                CHECK(m.data[static_cast<size_t>((h * t + q) * t + c)] ==
                      Catch::Approx(m.data[static_cast<size_t>((h * t + q + 1) * t + c)])
                          .epsilon(1e-9));
}

TEST_CASE("attention matches a per-head loop oracle") {
    EncoderConfig cfg;
    cfg.d_w = 6;
    cfg.d_e = 8;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.d_ff = 8;
    auto s = make_setup(cfg, 21);
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        EventIndices e = random_event(rng);
        auto [pv, av] = embed_event(s.reg, s.model, e);
        int64_t L = static_cast<int64_t>(e.args.size());
        int64_t t = L + 1, de = cfg.d_e, h = cfg.heads, dk = de / h;

        // X rows: predicate then arguments
        std::vector<std::vector<double>> x;
        x.emplace_back(pv.data.begin(), pv.data.end());
        for (int64_t j = 0; j < L; ++j)
            x.emplace_back(av.data.begin() + j * de, av.data.begin() + (j + 1) * de);

        auto proj = [&](const char* name) {
            const auto& w = s.reg.find(name)->value;
            std::vector<std::vector<double>> out(static_cast<size_t>(t),
                                                 std::vector<double>(static_cast<size_t>(de), 0));
            for (int64_t r = 0; r < t; ++r)
                for (int64_t i = 0; i < de; ++i)
                    for (int64_t j = 0; j < de; ++j)
                        out[static_cast<size_t>(r)][static_cast<size_t>(j)] +=
                            x[static_cast<size_t>(r)][static_cast<size_t>(i)] *
                            w.data[static_cast<size_t>(i * de + j)];
            return out;
        };
        auto q = proj("enc.L0.Wq"), k = proj("enc.L0.Wk");

        AttentionTrace<double> trace;
        encode_event_rich(s.reg, s.model, e, &trace);
        const auto& got = trace.layers[0];

        for (int64_t head = 0; head < h; ++head) {
            for (int64_t qi = 0; qi < t; ++qi) {
                std::vector<double> scores(static_cast<size_t>(t), 0);
                for (int64_t ki = 0; ki < t; ++ki) {
                    double dot = 0;
                    for (int64_t d = 0; d < dk; ++d)
                        dot += q[static_cast<size_t>(qi)][static_cast<size_t>(head * dk + d)] *
                               k[static_cast<size_t>(ki)][static_cast<size_t>(head * dk + d)];
                    scores[static_cast<size_t>(ki)] = dot / std::sqrt(static_cast<double>(dk));
                }
                double mx = *std::max_element(scores.begin(), scores.end());
                double sum = 0;
                for (auto& v : scores) {
                    v = std::exp(v - mx);
                    sum += v;
                }
                for (int64_t ki = 0; ki < t; ++ki)
                    CHECK(got.data[static_cast<size_t>((head * t + qi) * t + ki)] ==
                          Catch::Approx(scores[static_cast<size_t>(ki)] / sum)
                              .margin(1e-6));
            }
        }
    }
}

TEST_CASE("attention rows sum to one at every layer and head") {
    EncoderConfig cfg;
    cfg.d_w = 6;
    cfg.d_e = 8;
    cfg.layers = 2;
    cfg.heads = 4;
    cfg.d_ff = 16;
    auto s = make_setup(cfg, 33);
    Rng rng(5);
    for (int trial = 0; trial < 25; ++trial) {
        EventIndices e = random_event(rng);
        AttentionTrace<double> trace;
        encode_event_rich(s.reg, s.model, e, &trace);
        int64_t t = trace.seq_len;
        for (const auto& layer : trace.layers)
            for (int64_t row = 0; row < trace.heads * t; ++row) {
                double sum = 0;
                for (int64_t c = 0; c < t; ++c)
                    sum += layer.data[static_cast<size_t>(row * t + c)];
                CHECK(std::abs(sum - 1.0) < 1e-6);
            }
    }
}

TEST_CASE("argument permutation invariance") {
    EncoderConfig cfg;
    cfg.d_w = 6;
    cfg.d_e = 8;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.d_ff = 12;
    auto s = make_setup(cfg, 17);
    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        EventIndices e = random_event(rng);
        if (e.args.size() < 2) continue;
        EventIndices shuffled = e;
        Rng perm(trial + 1);
        perm.shuffle(shuffled.args);

        auto r1 = encode_event_rich(s.reg, s.model, e);
        auto r2 = encode_event_rich(s.reg, s.model, shuffled);
        CHECK(max_abs_diff(r1.data, r2.data) < 1e-6);

        auto f1 = encode_event_fusion(s.reg, s.model, e);
        auto f2 = encode_event_fusion(s.reg, s.model, shuffled);
        CHECK(max_abs_diff(f1.data, f2.data) < 1e-6);
    }
}

TEST_CASE("fusion recomposes from embed_event outputs") {
    EncoderConfig cfg;
    cfg.d_w = 6;
    cfg.d_e = 8;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.d_ff = 8;
    auto s = make_setup(cfg, 29);
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        EventIndices e = random_event(rng);
        auto fus = encode_event_fusion(s.reg, s.model, e);
        auto [p, a] = embed_event(s.reg, s.model, e);
        for (int64_t j = 0; j < cfg.d_e; ++j) {
            double sum = p.data[static_cast<size_t>(j)];
            for (size_t arg = 0; arg < e.args.size(); ++arg)
                sum += a.data[arg * static_cast<size_t>(cfg.d_e) + static_cast<size_t>(j)];
            CHECK(std::abs(fus.data[static_cast<size_t>(j)] - std::tanh(sum)) < 1e-12);
        }
    }
}

TEST_CASE("batched encoding equals one-by-one encoding") {
    EncoderConfig cfg;
    cfg.d_w = 6;
    cfg.d_e = 8;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.d_ff = 12;
    auto s = make_setup(cfg, 41);
    Rng rng(43);

    std::vector<EventIndices> events;
    for (int i = 0; i < 12; ++i) events.push_back(random_event(rng));

    std::vector<IndexedEvent> indexed;
    for (const auto& e : events) {
        IndexedEvent ie;
        ie.verb = e.verb;
        ie.prot_role = e.prot_role;
        for (const auto& a : e.args) ie.args.push_back(a);
        indexed.push_back(ie);
    }
    std::vector<const IndexedEvent*> ptrs;
    for (const auto& ie : indexed) ptrs.push_back(&ie);
    EventBatch batch = make_event_batch(ptrs);

    Tape<double> tape;
    auto vars = s.reg.bind(tape, false);
    auto out = encode_events_rich(tape, vars, s.model, batch);
    const auto& batched = tape.value(out);

    for (size_t i = 0; i < events.size(); ++i) {
        auto single = encode_event_rich(s.reg, s.model, events[i]);
        std::vector<double> row(batched.data.begin() + static_cast<int64_t>(i) * cfg.d_e,
                                batched.data.begin() + static_cast<int64_t>(i + 1) * cfg.d_e);
        CHECK(max_abs_diff(row, std::vector<double>(single.data.begin(),
                                                    single.data.end())) < 1e-6);
    }
}

TEST_CASE("parameter registry does not grow with the argument limit") {
    EncoderConfig cfg;
    cfg.d_w = 6;
    cfg.d_e = 8;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.d_ff = 12;

    auto collect = [&](int64_t max_args) {
        VocabSet vocabs;  // same vocabulary either way
        for (int i = 0; i < 10; ++i) {
            vocabs.verb_sense.intern("v" + std::to_string(i) + "-01", false);
            vocabs.role.intern("r" + std::to_string(i), false);
            vocabs.headword.intern("h" + std::to_string(i), false);
            vocabs.type.intern("t" + std::to_string(i), false);
        }
        DatasetIndexer indexer(vocabs, AblationSet{}, max_args);
        ParamRegistry<double> reg;
        Rng rng(1);
        register_encoder(reg, cfg, indexer.sizes(), rng);
        std::vector<std::pair<std::string, Shape>> sig;
        for (const auto& p : reg.all()) sig.emplace_back(p.name, p.value.shape);
        return std::pair(sig, reg.total_scalars());
    };

    auto a = collect(3);
    auto b = collect(23);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
}

TEST_CASE("untied projections give the predicate its own matrices") {
    EncoderConfig cfg;
    cfg.d_w = 5;
    cfg.d_e = 6;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.d_ff = 8;
    cfg.tied_projections = false;
    auto s = make_setup(cfg, 51);
    REQUIRE(s.reg.find("enc.W1p") != nullptr);

    Rng rng(53);
    EventIndices e = random_event(rng);
    auto [p, a] = embed_event(s.reg, s.model, e);
    auto want = oracle_project(s.reg, "enc.W1p", "enc.W2p", nullptr, "enc.bp", e.verb,
                               e.prot_role, 0, "enc.E_v", "enc.E_r", nullptr);
    CHECK(max_abs_diff(std::vector<double>(p.data.begin(), p.data.end()), want) < 1e-9);
}

TEST_CASE("type ablation removes the type table and term") {
    EncoderConfig cfg;
    cfg.d_w = 5;
    cfg.d_e = 6;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.d_ff = 8;
    cfg.use_types = false;
    auto s = make_setup(cfg, 61);
    CHECK(s.reg.find("enc.E_t") == nullptr);
    CHECK(s.reg.find("enc.W3") == nullptr);

    Rng rng(67);
    EventIndices e = random_event(rng);
    if (e.args.empty()) e.args.push_back({3, 4, 5});
    auto [p, a] = embed_event(s.reg, s.model, e);
    auto want = oracle_project(s.reg, "enc.W1", "enc.W2", nullptr, "enc.b",
                               e.args[0][0], e.args[0][1], 0, "enc.E_r", "enc.E_w",
                               nullptr);
    std::vector<double> got(a.data.begin(), a.data.begin() + cfg.d_e);
    CHECK(max_abs_diff(got, want) < 1e-9);
}

TEST_CASE("encoder gradients pass the finite-difference check") {
    EncoderConfig cfg;
    cfg.d_w = 4;
    cfg.d_e = 4;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.d_ff = 6;
    cfg.dropout = 0;

    for (const char* variant : {"rich", "fusion"}) {
        ParamRegistry<double> reg;
        Rng rng(71);
        VocabSizes sizes{8, 8, 8, 8};
        EncoderModel model = register_encoder(reg, cfg, sizes, rng);

        Rng ev_rng(73);
        EventIndices e = random_event(ev_rng, 8, 3);
        EventBatch batch = single_event_batch(e);

        LossFn<double> fn = [&](ParamRegistry<double>& r) {
            Tape<double> tape;
            auto vars = r.bind(tape, true);
            auto out = std::string(variant) == "rich"
                           ? encode_events_rich(tape, vars, model, batch)
                           : encode_events_fusion(tape, vars, model, batch);
            auto loss = tape.sum_all(tape.tanh_op(out));
            tape.backward(loss);
            r.collect(tape, vars);
            return tape.value(loss).data[0];
        };
        auto result = grad_check(fn, reg, 1e-5, 150, 77);
        INFO(variant << ": worst " << result.max_rel_error << " at "
                     << result.worst_param);
        CHECK(result.max_rel_error < 1e-4);
    }
}
