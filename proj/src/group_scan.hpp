#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

namespace conparse::detail {

// One parenthesized group seen by a tolerant left-to-right scan that never
// fails: unmatched ')' are skipped and unclosed groups are kept.
struct Group {
  std::size_t open = 0;
  std::size_t close = std::string_view::npos;
  std::string label;
  std::vector<std::string> words;
  std::size_t children = 0;
  bool has_label_slot = true;
};

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

inline std::vector<Group> scan_groups(std::string_view text) {
  std::vector<Group> done;
  std::vector<Group> open;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (is_space(c)) {
      ++i;
    } else if (c == '(') {
      if (!open.empty()) {
        open.back().children++;
        open.back().has_label_slot = false;
      }
      Group g;
      g.open = i;
      open.push_back(std::move(g));
      ++i;
    } else if (c == ')') {
      if (!open.empty()) {
        open.back().close = i;
        done.push_back(std::move(open.back()));
        open.pop_back();
      }
      ++i;
    } else {
      std::size_t j = i;
      while (j < text.size() && !is_space(text[j]) && text[j] != '(' && text[j] != ')') ++j;
      if (!open.empty()) {
        Group& g = open.back();
        if (g.has_label_slot) {
          g.label = std::string(text.substr(i, j - i));
          g.has_label_slot = false;
        } else {
          g.words.emplace_back(text.substr(i, j - i));
        }
      }
      i = j;
    }
  }
  for (auto& g : open) done.push_back(std::move(g));
  std::sort(done.begin(), done.end(), [](const Group& a, const Group& b) { return a.open < b.open; });
  return done;
}

}  // namespace conparse::detail
