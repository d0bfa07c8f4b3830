#include <doctest.h>

#include <stdexcept>

#include "entcert/config.hpp"

using namespace entcert;

TEST_CASE("config parse and accessors") {
  ConfigMap cfg = ConfigMap::parse(R"(
mode = "coherent"   # comment
out = "results"

[ensemble]
amplitudes = [0.0, 0.25, 0.5]
eta = 0.9
n_states = 3

[noise]
snr_db = 15.0
gamma = 0.25

[bins]
delta = 4
range = 1.5
kind = "fixed"

[sdp]
cutoff = 20
epsilon = 1e-9
optimize = true

[sweep]
axes = ["snr_db", "delta"]
snr_db = [10, 15, 20]
)");
  CHECK(cfg.get_string("mode", "") == "coherent");
  CHECK(cfg.get_number("ensemble.eta", 0) == 0.9);
  CHECK(cfg.get_numbers("ensemble.amplitudes") ==
        std::vector<double>{0.0, 0.25, 0.5});
  CHECK(cfg.get_bool("sdp.optimize", false));
  CHECK(cfg.get_strings("sweep.axes") ==
        std::vector<std::string>{"snr_db", "delta"});
  CHECK(cfg.get_number("missing.key", 7.0) == 7.0);
  CHECK_THROWS_AS(cfg.get_number("mode", 0.0), std::invalid_argument);
}

TEST_CASE("config round trip is the identity") {
  ConfigMap cfg = ConfigMap::parse(R"(
top_level = 3.5
name = "hello world"
flag = false

[alpha]
values = [1, 2.5, -3e-4]
labels = ["a", "b"]
inf_value = inf

[beta]
nested = "x"
)");
  ConfigMap reparsed = ConfigMap::parse(cfg.serialize());
  CHECK(reparsed == cfg);
  // And a second round trip is stable text-wise.
  CHECK(reparsed.serialize() == cfg.serialize());
}

TEST_CASE("malformed config lines are rejected") {
  CHECK_THROWS_AS(ConfigMap::parse("[unterminated\nkey = 1"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ConfigMap::parse("novalue ="), std::invalid_argument);
  CHECK_THROWS_AS(ConfigMap::parse("bad value here"), std::invalid_argument);
  CHECK_THROWS_AS(ConfigMap::parse("key = [1, 2"), std::invalid_argument);
}
