#pragma once

#include "fccnn/autograd.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fccnn {

struct GradCaseResult {
    std::string name;
    std::size_t points = 0;
    std::size_t coordinates = 0;  // checked over all points
    double max_rel_error = 0.0;
    std::string worst;  // "<point>:<coordinate>"
};

struct GradSuiteResult {
    std::vector<GradCaseResult> cases;
    double tolerance = 1e-4;
    double max_rel_error = 0.0;
    bool passed() const { return max_rel_error < tolerance; }
};

/// grad_check of every layer primitive (convolutions grouped, strided and
/// depthwise, linear, cardioid, CReLU, ReLU) and of hinge -> gate -> loss at
/// `points` random f64 points each. Points keep clear of kinks, margins and
/// the gate switch so the central difference sees one smooth branch.
GradSuiteResult run_gradient_suite(std::size_t points = 10, std::uint64_t seed = 7, double eps = 1e-5,
                                   double tolerance = 1e-4);

std::string format_gradient_suite(const GradSuiteResult& result);

} // namespace fccnn
