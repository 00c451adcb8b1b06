#pragma once

// Mini-grammar for matrices in configs and on the command line:
//
//   spec   := "identity" | "diag(" num {"," num} ")" | "jordan(" num "," int ")"
//           | "random_gaussian(" int ["," num] ")" | "random_orthogonal(" int ")"
//           | "blockdiag(" spec {"," spec} ")" | "[" row {"," row} "]"
//   row    := "[" num {"," num} "]"
//
// random_gaussian draws i.i.d. N(0, 1) entries times an optional scale.

#include "attnflow/geometry.hpp"

#include <cstdint>
#include <string>

namespace attnflow
{
    /// `dim` is needed for identity and the random specs and checked against
    /// the size of the others; pass 0 to accept any size. Throws ParseError.
    MatrixXd parse_matrix_spec(const std::string& spec, int dim = 0);

    MatrixXd random_gaussian_matrix(std::uint64_t seed, int dim, double scale = 1.0);

    /// Haar-distributed orthogonal matrix (QR of a Gaussian matrix, signs fixed
    /// by the diagonal of R).
    MatrixXd random_orthogonal_matrix(std::uint64_t seed, int dim);
}
