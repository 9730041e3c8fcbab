#include "evidenced/alignment.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace evd {

std::uint8_t encode_base(char c) {
  switch (std::toupper(static_cast<unsigned char>(c))) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'T':
    case 'U': return 3;
    // IUPAC ambiguity codes and gaps are treated as missing data.
    case 'R': case 'Y': case 'S': case 'W': case 'K': case 'M':
    case 'B': case 'D': case 'H': case 'V': case 'N': case 'X':
    case '-': case '.': case '?':
      return kMissing;
    default:
      throw InvalidInput(std::string("unrecognized sequence character '") +
                         c + "'");
  }
}

char decode_base(std::uint8_t state) {
  static const char table[] = {'A', 'C', 'G', 'T', '-'};
  if (state > kMissing) throw InvalidInput("decode_base: bad state");
  return table[state];
}

void Alignment::validate() const {
  if (names.size() != sequences.size() || names.empty())
    throw InvalidInput("alignment: name/sequence count mismatch");
  const std::size_t k = sequences.front().size();
  if (k == 0) throw InvalidInput("alignment: empty sequences");
  for (const auto& s : sequences)
    if (s.size() != k)
      throw InvalidInput("alignment: unequal sequence lengths");
  auto sorted = names;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidInput("alignment: duplicate taxon name");
}

namespace {

std::vector<std::uint8_t> encode_sequence(const std::string& raw) {
  std::vector<std::uint8_t> out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    out.push_back(encode_base(c));
  }
  return out;
}

}  // namespace

Alignment parse_fasta(const std::string& text) {
  Alignment out;
  std::istringstream in(text);
  std::string line, current;
  auto flush = [&]() {
    if (!out.names.empty()) out.sequences.push_back(encode_sequence(current));
    current.clear();
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      flush();
      std::string name = line.substr(1);
      const auto end = name.find_first_of(" \t");
      if (end != std::string::npos) name = name.substr(0, end);
      if (name.empty()) throw InvalidInput("fasta: empty record name");
      out.names.push_back(name);
    } else {
      if (out.names.empty())
        throw InvalidInput("fasta: sequence data before first '>' header");
      current += line;
    }
  }
  flush();
  out.validate();
  return out;
}

Alignment parse_phylip(const std::string& text) {
  std::istringstream in(text);
  std::size_t n = 0, k = 0;
  if (!(in >> n >> k)) throw InvalidInput("phylip: missing n/k header");
  Alignment out;
  // Relaxed sequential format: each taxon is a name token followed by its
  // sequence, split across whitespace however the writer liked.
  std::string token;
  for (std::size_t row = 0; row < n; ++row) {
    if (!(in >> token))
      throw InvalidInput("phylip: expected " + std::to_string(n) + " taxa");
    out.names.push_back(token);
    std::string raw;
    while (raw.size() < k && in >> token) raw += token;
    if (raw.size() != k)
      throw InvalidInput("phylip: sequence for '" + out.names.back() +
                         "' does not match header length");
    out.sequences.push_back(encode_sequence(raw));
  }
  out.validate();
  return out;
}

Alignment read_alignment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open alignment file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos)
    throw InvalidInput("empty alignment file: " + path);
  if (text[first] == '>') return parse_fasta(text);
  return parse_phylip(text);
}

std::string to_fasta(const Alignment& alignment) {
  alignment.validate();
  std::string out;
  for (std::size_t i = 0; i < alignment.names.size(); ++i) {
    out += '>';
    out += alignment.names[i];
    out += '\n';
    const auto& seq = alignment.sequences[i];
    for (std::size_t j = 0; j < seq.size(); ++j) {
      out += decode_base(seq[j]);
      if ((j + 1) % 70 == 0) out += '\n';
    }
    if (seq.size() % 70 != 0) out += '\n';
  }
  return out;
}

void write_fasta(const Alignment& alignment, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write alignment file: " + path);
  out << to_fasta(alignment);
}

}  // namespace evd
