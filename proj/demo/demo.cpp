// Walk through the TV screen p = 1 - x^2 - y^4 with Gamma = (x, y, y^2):
// membership along the diagonal, a flat witness, a separating pencil and an
// Archimedean certificate.
#include <cstdio>

#include "gammahull/certify.hpp"
#include "gammahull/hull.hpp"
#include "gammahull/io.hpp"

using namespace gammahull;

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : GAMMAHULL_FIXTURE_DIR "/tv4.json";
  const auto f = io::parse_problem(path);
  std::printf("%s\n", f.name.c_str());

  std::printf("\n  t      p(t,t)    level-0 verdict          margin\n");
  for (double t : {0.0, 0.5, 0.7, 0.75, 0.8, 1.0}) {
    std::vector<CMatrix> X{CMatrix::Constant(1, 1, t), CMatrix::Constant(1, 1, t)};
    const double pv = evaluate(f.p, X)(0, 0).real();
    auto v = membership(f.p, f.gamma, X, 0);
    std::printf("  %-5.2f  %8.4f  %-22s %10.3e\n", t, pv, to_string(v.status).c_str(), v.margin);
  }

  const auto& inside = f.anchors.at("inside");
  auto rep = run_hierarchy(f.p, f.gamma, inside, 1);
  std::printf("\ninside anchor: %s (%s)\n", to_string(rep.outcome).c_str(), rep.message.c_str());
  if (rep.witness) std::printf("  witness error %.2e, p(Z) min eig %.4f\n", rep.witness_error, rep.witness->residual_psd);

  const auto& outside = f.anchors.at("outside");
  auto cert = separate(f.p, f.gamma, outside, separation_degree(f.p, 0));
  if (cert) {
    auto r = verify_certificate(*cert, f.p, outside);
    std::printf("\noutside anchor: separating pencil, violation %.4f, residual %.2e, verified %s\n", cert->violation,
                r.recomposition_residual, r.ok ? "yes" : "no");
  }

  if (f.archimedean_k) {
    auto qm = archimedean_certificate(f.p, *f.archimedean_k, 2);
    if (qm)
      std::printf("\n%.0f^2 - x^2 - y^2 in QM(p): degrees (%d, %d), residual %.2e\n", *f.archimedean_k, qm->alpha,
                  qm->beta, qm->recomposition_residual);
  }
  return 0;
}
