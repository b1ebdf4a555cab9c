#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "semcond/binary_io.hpp"
#include "semcond/conditioning.hpp"

namespace semcond {

void write_matches(std::ostream& out, const MatchSet& matches) {
  out << "# " << matches.size_first << ' ' << matches.size_second << '\n';
  char buf[64];
  for (const auto& m : matches.pairs) {
    // Shortest round-trip representation keeps files stable and exact.
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), m.score);
    out << m.first << ' ' << m.second << ' ' << std::string_view(buf, end - buf) << '\n';
  }
}

void write_match_file(const std::filesystem::path& path, const MatchSet& matches) {
  std::ostringstream s;
  write_matches(s, matches);
  write_file_atomic(path, s.str());
}

MatchSet read_match_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(ParseError::Kind::io, 0, "cannot open match file " + path.string());
  MatchSet out;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  auto fail = [&](const std::string& why) {
    throw ParseError(ParseError::Kind::malformed, line_no,
                     path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (!header) {
      std::string hash;
      if (!(ls >> hash >> out.size_first >> out.size_second) || hash != "#") {
        fail("expected header \"# N1 N2\"");
      }
      header = true;
      continue;
    }
    Match m;
    if (!(ls >> m.first >> m.second >> m.score)) fail("expected \"i j score\"");
    if (m.first >= out.size_first || m.second >= out.size_second) fail("match index out of range");
    out.pairs.push_back(m);
  }
  if (!header) fail("missing header");
  if (!out.is_one_to_one()) fail("matches are not one-to-one");
  return out;
}

}  // namespace semcond
