// Solves an SDPA file with the bundled solver and writes a CSDP-layout
// solution, so the external-solver path can be exercised without CSDP.
#include <fstream>
#include <iostream>

#include "gammahull/sdp/sdpa.hpp"
#include "gammahull/sdp/solver.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: sdpa_solve input.dat-s output.sol\n";
    return 1;
  }
  try {
    using namespace gammahull::sdp;
    const SdpProblem prob = import_sdpa(argv[1]);
    const SdpSolution s = solve(prob);
    std::ofstream os(argv[2]);
    if (!os) throw std::runtime_error(std::string("cannot write ") + argv[2]);
    write_solution(exported_dims(prob), RawSolution{s.y, s.primal_matrix, s.dual_matrix}, os);
    std::cout << to_string(s.status) << " " << s.objective_value << "\n";
    return s.status == Status::indeterminate ? 2 : 0;
  } catch (const std::exception& e) {
    std::cerr << "sdpa_solve: " << e.what() << "\n";
    return 1;
  }
}
