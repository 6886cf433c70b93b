#include "doctest.h"
#include "ksmc/config.hpp"

using namespace ksmc;

TEST_CASE("config map round trips through text") {
    ConfigMap m;
    m.set("experiment", "duffing");
    m.set_double("dt_seconds", 0.01);
    m.set_int("seed", 17);
    m.set_bool("ks_final_correction", true);
    Vec v(3);
    v << 0.1, 0.25, 39.478;
    m.set_vector("duf_mu", v);
    const std::string text = serialize_config(m);
    const ConfigMap back = parse_config(text);
    CHECK(serialize_config(back) == text);
    CHECK(back.get_string("experiment") == "duffing");
    CHECK(back.get_double("dt_seconds", 0.0) == doctest::Approx(0.01));
    CHECK(back.get_int("seed", 0) == 17);
    CHECK(back.get_bool("ks_final_correction", false));
    const Vec vb = back.get_vector("duf_mu", Vec(), 3);
    CHECK(vb.size() == 3);
    CHECK(vb[2] == doctest::Approx(39.478));
    CHECK(config_hash(back) == config_hash(m));
}

TEST_CASE("parser accepts comments and blank lines, rejects junk") {
    const auto m = parse_config("# campaign\n\nseed = 3\n  dt_seconds =0.5\n");
    CHECK(m.get_int("seed", 0) == 3);
    CHECK(m.get_double("dt_seconds", 0.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(parse_config("no equals sign here\n"), config_error);
    CHECK_THROWS_AS(parse_config("a = 1\na = 2\n"), config_error);
    CHECK_THROWS_AS(parse_config("= 1\n"), config_error);
}

TEST_CASE("typed getters validate their parses") {
    const auto m = parse_config("x = notanumber\nflag = maybe\n");
    CHECK_THROWS_AS(m.get_double("x", 0.0), config_error);
    CHECK_THROWS_AS(m.get_int("x", 0), config_error);
    CHECK_THROWS_AS(m.get_bool("flag", false), config_error);
    CHECK(m.get_double("missing", 2.5) == doctest::Approx(2.5));
    CHECK(m.get_string("missing", "d") == "d");
    CHECK_THROWS_AS(m.get_string("missing"), config_error);
}

TEST_CASE("single values broadcast to the expected vector length") {
    const auto m = parse_config("a = 0.3\nb = 1,2,3\n");
    const Vec a = m.get_vector("a", Vec(), 5);
    REQUIRE(a.size() == 5);
    CHECK(a[4] == doctest::Approx(0.3));
    const Vec b = m.get_vector("b", Vec(), 3);
    CHECK(b[1] == doctest::Approx(2.0));
    CHECK_THROWS_AS(m.get_vector("b", Vec(), 4), config_error);
}

TEST_CASE("experiment config round trips and rejects unknown keys") {
    const auto base = parse_config(
        "experiment = linear_gaussian\nt_final_seconds = 5\ndt_seconds = 0.01\n"
        "seed = 1\nn_seeds = 2\nfilters = ks,kalman\nks_n = 100\n");
    const ExperimentConfig cfg = ExperimentConfig::from_map(base);
    CHECK(cfg.T == doctest::Approx(5.0));
    CHECK(cfg.ks.N == 100);
    REQUIRE(cfg.filters.size() == 2);
    CHECK(cfg.filters[1] == "kalman");
    const ExperimentConfig cfg2 = ExperimentConfig::from_map(cfg.to_map());
    CHECK(serialize_config(cfg2.to_map()) == serialize_config(cfg.to_map()));

    CHECK_THROWS_AS(
        ExperimentConfig::from_map(parse_config("experiment = linear_gaussian\nks_nn = 2\n")),
        config_error);
}

TEST_CASE("experiment validation catches bad combinations") {
    auto make = [](const std::string& extra) {
        return ExperimentConfig::from_map(
            parse_config("experiment = duffing\n" + extra));
    };
    CHECK_THROWS(make("filters = kalman\n"));       // oracle needs the linear problem
    CHECK_THROWS(make("filters = wavelet\n"));      // unknown filter
    CHECK_THROWS(make("obs_form = tea_leaves\n"));  // unknown record form
    CHECK_THROWS(make("dt_seconds = 0\n"));
    CHECK_NOTHROW(make("filters = ks,abs1\nobs_form = algebraic\n"));
}

TEST_CASE("reading a missing config file is an io error") {
    CHECK_THROWS_AS(load_config("/nonexistent/path.cfg"), io_error);
}
