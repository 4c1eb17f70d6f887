#include "aptsim/stats.hpp"

#include <cmath>

#include <boost/math/distributions/students_t.hpp>

namespace aptsim {

double student_t_halfwidth(double sd, int n, double level) {
    if (n < 2 || sd <= 0.0) return 0.0;
    boost::math::students_t dist(static_cast<double>(n - 1));
    double q = boost::math::quantile(dist, 0.5 + level / 2.0);
    return q * sd / std::sqrt(static_cast<double>(n));
}

}  // namespace aptsim
