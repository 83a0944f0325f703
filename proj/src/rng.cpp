#include "cbsim/rng.hpp"

#include <boost/random/beta_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace cbsim {

std::size_t Rng::uniform_index(std::size_t n) {
    if (n <= 1) return 0;
    boost::random::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(*this);
}

double Rng::normal(double mean, double sd) {
    boost::random::normal_distribution<double> dist(mean, sd);
    return dist(*this);
}

double Rng::beta(double alpha, double beta) {
    boost::random::beta_distribution<double> dist(alpha, beta);
    return dist(*this);
}

int Rng::poisson(double mean) {
    boost::random::poisson_distribution<int, double> dist(mean);
    return dist(*this);
}

}  // namespace cbsim
