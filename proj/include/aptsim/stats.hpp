#pragma once

namespace aptsim {

// Half-width of a two-sided Student-t confidence interval for a sample mean,
// given the sample standard deviation and the sample size. Returns 0 for
// samples too small to have one.
double student_t_halfwidth(double sd, int n, double level = 0.95);

}  // namespace aptsim
