#include <set>

#include "doctest.h"
#include "warpnet/gradcheck.hpp"

using namespace warpnet;

TEST_CASE("all differentiable ops pass the finite-difference check") {
  auto results = run_gradient_checks(1234);
  std::set<std::string> seen;
  REQUIRE(results.size() >= 8);
  for (const auto& r : results) {
    INFO("op: " << r.op << " max_rel_error: " << r.max_rel_error);
    CHECK(r.passed);
    CHECK(r.max_rel_error < 1e-4);
    seen.insert(r.op);
  }
  for (const char* op :
       {"conv1d", "dense", "tanh", "relu", "softmax_xent", "constraint",
        "resample_input", "resample_warp", "ttn_end_to_end"})
    CHECK(seen.count(op) == 1);
}

TEST_CASE("a corrupted gradient is detected and named") {
  for (const char* op : {"dense", "constraint", "resample_warp"}) {
    auto results = run_gradient_checks(1234, op);
    bool found = false;
    for (const auto& r : results)
      if (r.op == op) {
        found = true;
        CHECK_FALSE(r.passed);
        CHECK(r.max_rel_error >= 1e-4);
      } else {
        CHECK(r.passed);
      }
    CHECK(found);
  }
}
