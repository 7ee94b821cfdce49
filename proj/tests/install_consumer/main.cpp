#include <cmath>
#include <cstdio>

#include "geodens/density_geodesic.hpp"
#include "geodens/field_io.hpp"

int main() {
  const geodens::Grid grid(1, 32);
  const auto rho = geodens::ScalarField::sample(grid, [](double x, double) { return 1.0 + 0.2 * std::cos(x); });
  const auto p = geodens::ScalarField::sample(grid, [](double x, double) { return 0.1 * std::sin(x); });
  const geodens::DensityState end = geodens::flow(geodens::make_density_state(rho, p, 1), 0.5, 0.05);
  const bool ok = std::abs(end.rho.mean() - 1.0) < 1e-12 &&
                  geodens::git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a";
  std::printf("consumer %s\n", ok ? "ok" : "failed");
  return ok ? 0 : 1;
}
