// A few numbers for Pi_lambda in the plane: kernel values, a window piece, norms at one lambda.
#include "hermite_lab/norms.hpp"

#include <iostream>

using namespace hlab;

int main() {
  const double lam = 42;
  Vec x(2), y(2);
  x << 1.0, -0.5;
  y << 2.5, 0.3;
  std::cout << "Pi_42(x, y)            " << projection_direct(lam, x, y) << "\n";
  std::cout << "Pi_42(x, x)            " << projection_direct(lam, x, x) << "\n";
  auto w = make_window(WindowKind::plus, 4);
  std::cout << "window psi_4^+ (time)  " << windowed_projection_timequad(lam, w, x, y).value << "\n";
  std::cout << "window psi_4^+ (spec)  " << windowed_projection_spectral(lam, w, x, y) << "\n";

  TensorProjection P(lam, 2, projection_axis(lam, 1.5, 6));
  LevelSynthesis S(P);
  PowerOptions opt;
  opt.real_field = true;
  opt.seed = 1;
  std::cout << "||Pi||_{2->4}          " << norm_pq(S, 2.0, 4.0, {}, opt).value << "\n";
  std::cout << "||Pi||_{2->inf}        " << std::sqrt(P.diagonal().maxCoeff()) << "\n";

  auto [r0, r1] = annulus_radii(lam, 0.25, +1);
  auto g = radial_grid(r0, r1, lam);
  PolarOperator A(projection_levels(lam), g, g);
  std::cout << "annulus mu=1/4, 2->2   " << A.norm_22() << "\n";
}
