// Simulates a VMA(1) series, then compares standard deviations of the
// leading loadings from the plug-in AD estimate and the block bootstrap.
#include <iomanip>
#include <iostream>

#include "tspca/tspca.hpp"

int main() {
  const tspca::DGPSpec spec = tspca::fixture(2);
  const auto series = tspca::simulate(spec, 2000, 42);

  const auto direct = tspca::standard_errors(tspca::direct_estimate(series, tspca::Assumption::ad));
  const auto boot = tspca::bootstrap_sd(series, {10, 300, 7});
  const auto r = tspca::proportion_of_variation(boot.point.values);

  std::cout << std::fixed << std::setprecision(4);
  std::cout << "eigenvalues: " << boot.point.values.transpose() << "\n";
  std::cout << "cumulative r: " << r.r.transpose() << "\n";
  std::cout << "PC1 loadings:      " << boot.point.loadings().row(0) << "\n";
  std::cout << "  sd (direct, AD): " << direct.sd_loadings.row(0) << "\n";
  std::cout << "  sd (bootstrap):  " << boot.sd_loadings.row(0) << "\n";
}
