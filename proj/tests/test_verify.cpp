#include <gtest/gtest.h>

#include "tucker/verify.hpp"

using namespace tucker;

TEST(VerifySuites, AllPassOnAFreshBuild) {
  VerifyOptions options;
  options.trials = 1000;
  for (auto name : verify_suite_names()) {
    const SuiteResult r = run_verify_suite(name, options);
    EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
  }
}

TEST(VerifySuites, CorruptedCoresFail) {
  VerifyOptions options;
  options.trials = 50;
  options.corrupt_cores = true;
  for (const char* name : {"distmult", "complex", "simple"}) {
    const SuiteResult r = run_verify_suite(name, options);
    EXPECT_FALSE(r.passed) << name;
    EXPECT_GT(r.worst, 1e-12);
  }
}

TEST(VerifySuites, UnknownNameRejected) {
  EXPECT_THROW(run_verify_suite("nope", {}), std::invalid_argument);
}

TEST(GradientRelativeError, FloorAvoidsDivisionByZero) {
  EXPECT_EQ(gradient_relative_error(0.0, 0.0), 0.0);
  EXPECT_NEAR(gradient_relative_error(1.0, 1.1), 0.1 / 1.1, 1e-15);
  EXPECT_NEAR(gradient_relative_error(1e-9, 0.0), 1e-3, 1e-15);
}
