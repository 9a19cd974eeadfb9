#pragma once

// Command-line front end: opkit <command> <file> [flags].
//
//   decompose  partition-of-unity certificate, projector report with an operator
//   solve      split solve of P[D] u = f through the factor equations
//   koszul     complex, homotopy, exactness and Q-free reports
//   certify    Groebner unit-ideal certificates
//   gjms       GJMS coefficients, null space, solve and eigenspaces on a spectral model
//   verify     re-validates a report emitted by any of the above
//
// Exit codes: 0 success, 1 mathematical failure, 2 input error, 3 budget exceeded.

#include <iosfwd>

namespace opkit::cli {

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace opkit::cli
