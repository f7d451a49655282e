#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rep/adam.hpp"

using namespace rep;

namespace {

ParamRegistry<double> one_param(double init_value, int64_t n = 3) {
    ParamRegistry<double> reg;
    reg.add("w", init_const<double>({n}, init_value));
    return reg;
}

void set_grad(ParamRegistry<double>& reg, double g) {
    for (auto& v : reg.at(0).grad.data) v = g;
}

}  // namespace

TEST_CASE("zero gradient leaves parameters unchanged and decays moments") {
    auto reg = one_param(0.5);
    auto st = AdamState<double>::init(reg, 1e-3);

    // one real step to give the moments something to decay
    set_grad(reg, 0.2);
    adam_step(reg, st);
    double m_before = st.m[0][0];
    double v_before = st.v[0][0];
    std::vector<double> params_after_first = reg.at(0).value.data;

    set_grad(reg, 0.0);
    adam_step(reg, st);
    CHECK(st.step == 2);
    CHECK(st.m[0][0] == Catch::Approx(0.9 * m_before).epsilon(1e-12));
    CHECK(st.v[0][0] == Catch::Approx(0.999 * v_before).epsilon(1e-12));
    // decayed first moment still moves the parameter; with a fresh state it
    // would not
    auto reg2 = one_param(0.5);
    auto st2 = AdamState<double>::init(reg2, 1e-3);
    set_grad(reg2, 0.0);
    adam_step(reg2, st2);
    CHECK(reg2.at(0).value.data == std::vector<double>(3, 0.5));
}

TEST_CASE("hand-computed first step") {
    auto reg = one_param(0.0, 1);
    auto st = AdamState<double>::init(reg, 1e-3);
    set_grad(reg, 0.1);
    adam_step(reg, st);
    // m=0.01, v=1e-5; mhat=0.1, vhat=0.01
    // delta = -1e-3 * 0.1 / (0.1 + 1e-8) = -1e-3 * (1 - 1e-7 + ...)
    double expected = -1e-3 * 0.1 / (0.1 + 1e-8);
    CHECK(reg.at(0).value.data[0] == Catch::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(reg.at(0).value.data[0] + 1e-3) < 2e-10);
}

TEST_CASE("constant gradient drives updates toward lr * sign(g)") {
    auto reg = one_param(0.0, 1);
    auto st = AdamState<double>::init(reg, 1e-3);
    double prev = 0.0;
    double delta = 0.0;
    for (int i = 0; i < 500; ++i) {
        set_grad(reg, -0.37);
        adam_step(reg, st);
        delta = reg.at(0).value.data[0] - prev;
        prev = reg.at(0).value.data[0];
    }
    CHECK(delta == Catch::Approx(1e-3).epsilon(1e-4));  // minus lr * sign(-0.37)
}

TEST_CASE("non-finite gradient names the parameter") {
    ParamRegistry<double> reg;
    reg.add("enc.W1", init_const<double>({2}, 0.0));
    reg.add("enc.broken", init_const<double>({2}, 0.0));
    auto st = AdamState<double>::init(reg, 1e-3);
    reg.at(1).grad.data[1] = std::numeric_limits<double>::quiet_NaN();
    try {
        adam_step(reg, st);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("enc.broken") != std::string::npos);
    }
}

TEST_CASE("state must match the registry") {
    auto reg = one_param(0.0);
    auto st = AdamState<double>::init(reg, 1e-3);
    reg.add("extra", init_const<double>({2}, 0.0));
    CHECK_THROWS_AS(adam_step(reg, st), DataError);
}
