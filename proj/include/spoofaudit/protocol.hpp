#ifndef SPOOFAUDIT_PROTOCOL_HPP
#define SPOOFAUDIT_PROTOCOL_HPP

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spoofaudit/common.hpp"

namespace spoofaudit {

enum class Label { kBonafide, kSpoof };

inline std::string label_name(Label l) {
  return l == Label::kBonafide ? "bonafide" : "spoof";
}

inline Label parse_label(const std::string& s) {
  if (s == "bonafide") return Label::kBonafide;
  if (s == "spoof") return Label::kSpoof;
  throw ValidationError("unknown class label: " + s);
}

struct ProtocolEntry {
  std::string file_id;
  Label label = Label::kBonafide;
  std::string phrase_id;
};

// Protocol file: `<file_id> <bonafide|spoof> <phrase_id>` per line.
inline std::vector<ProtocolEntry> parse_protocol(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("parse_protocol: cannot open " + path);
  std::vector<ProtocolEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    ProtocolEntry e;
    std::string cls;
    if (!(ss >> e.file_id)) continue;
    if (!(ss >> cls >> e.phrase_id))
      throw ValidationError("parse_protocol: malformed line " +
                            std::to_string(lineno) + " in " + path);
    e.label = parse_label(cls);
    out.push_back(std::move(e));
  }
  return out;
}

inline void write_protocol(const std::vector<ProtocolEntry>& entries,
                           const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("write_protocol: cannot open " + path);
  for (const auto& e : entries)
    f << e.file_id << " " << label_name(e.label) << " " << e.phrase_id << "\n";
}

}  // namespace spoofaudit

#endif  // SPOOFAUDIT_PROTOCOL_HPP
