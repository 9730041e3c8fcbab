#ifndef EVIDENCED_CHAIN_IO_HPP
#define EVIDENCED_CHAIN_IO_HPP

#include <optional>
#include <string>

#include "evidenced/mcmc.hpp"

namespace evd {

// Chain CSV: header = packing columns + "log_post" + "log_lik", one draw
// per row, 17 significant digits.  A JSON sidecar (<csv>.json) records the
// seed, priors, model kind, acceptance rate, and packing version.
void write_chain(const Chain& chain, const std::string& csv_path);

struct LoadedChain {
  Matrix draws;
  Vector log_post;
  std::optional<Vector> log_lik;
  std::vector<std::string> column_names;  // draw columns only
  std::optional<Chain> full;  // when the sidecar was present and parseable
};

// Reads a chain CSV (ours or externally produced with the same columns).
LoadedChain load_chain(const std::string& csv_path);

LogDensitySample loaded_chain_to_sample(const LoadedChain& chain);

}  // namespace evd

#endif  // EVIDENCED_CHAIN_IO_HPP
