#ifndef EVIDENCED_ALIGNMENT_HPP
#define EVIDENCED_ALIGNMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "evidenced/common.hpp"

namespace evd {

// States 0..3 are A, C, G, T; kMissing covers gaps and ambiguity codes.
constexpr std::uint8_t kMissing = 4;

std::uint8_t encode_base(char c);  // throws InvalidInput on junk
char decode_base(std::uint8_t state);

struct Alignment {
  std::vector<std::string> names;
  std::vector<std::vector<std::uint8_t>> sequences;

  std::size_t n_taxa() const { return names.size(); }
  std::size_t n_sites() const {
    return sequences.empty() ? 0 : sequences.front().size();
  }
  void validate() const;  // equal row lengths, unique names, >=1 site
};

Alignment parse_fasta(const std::string& text);
Alignment parse_phylip(const std::string& text);  // relaxed (whitespace-split)
Alignment read_alignment(const std::string& path);  // sniffs FASTA vs PHYLIP

std::string to_fasta(const Alignment& alignment);
void write_fasta(const Alignment& alignment, const std::string& path);

}  // namespace evd

#endif  // EVIDENCED_ALIGNMENT_HPP
