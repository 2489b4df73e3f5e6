#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "conparse/tree.hpp"

namespace conparse::testgen {

struct TreeGenOptions {
  std::size_t max_depth = 8;  // depth("(X (A a))") == 2
  std::size_t max_tokens = 25;
  // Draw words from a tiny vocabulary so duplicate phrases are common.
  bool small_vocabulary = false;
};

inline std::size_t draw(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline Node random_preterminal(std::mt19937_64& rng, const TreeGenOptions& opts) {
  static const std::vector<std::pair<std::string, std::string>> lexicon = {
      {"DT", "the"},      {"DT", "a"},          {"NN", "cat"},      {"NN", "market"},  {"NN", "company"},
      {"NNS", "shares"},  {"NNS", "people"},    {"NNP", "Asia"},    {"NNP", "Singapore"}, {"VBD", "said"},
      {"VBD", "rose"},    {"VBD", "bought"},    {"VBN", "located"}, {"VBZ", "is"},     {"VB", "buy"},
      {"JJ", "big"},      {"JJ", "small"},      {"JJ", "quick"},    {"RB", "abruptly"}, {"IN", "in"},
      {"IN", "by"},       {"CC", "and"},        {"CD", "84"},       {"CD", "1990"},    {"PRP", "it"},
      {",", ","},         {".", "."},           {"NN", "house"},    {"NN", "profit"},  {"NN", "stock"},
  };
  static const std::vector<std::pair<std::string, std::string>> tiny = {
      {"NN", "w"}, {"NN", "v"}, {"IN", "by"}, {"CC", "and"}, {"DT", "the"},
  };
  const auto& pool = opts.small_vocabulary ? tiny : lexicon;
  const auto& [pos, word] = pool[draw(rng, 0, pool.size() - 1)];
  return make_leaf(pos, word);
}

inline std::string random_phrase_label(std::mt19937_64& rng) {
  static const std::vector<std::string> labels = {"S", "NP", "VP", "PP", "ADJP", "ADVP", "SBAR", "QP"};
  return labels[draw(rng, 0, labels.size() - 1)];
}

// A phrasal node over `length` tokens whose subtree has depth <= levels.
inline Node random_phrase(std::mt19937_64& rng, std::size_t length, std::size_t levels, const TreeGenOptions& opts) {
  Node node = make_node(random_phrase_label(rng), {});
  if (levels <= 2) {
    for (std::size_t i = 0; i < length; ++i) node.children.push_back(random_preterminal(rng, opts));
    return node;
  }
  // Occasional unary chain above a multi-token phrase.
  if (length > 1 && draw(rng, 0, 9) == 0) {
    node.children.push_back(random_phrase(rng, length, levels - 1, opts));
    return node;
  }
  std::size_t parts = draw(rng, 1, std::min<std::size_t>(length, 4));
  std::vector<std::size_t> sizes(parts, 1);
  for (std::size_t extra = length - parts; extra > 0; --extra) ++sizes[draw(rng, 0, parts - 1)];
  for (std::size_t size : sizes) {
    if (size == 1 && draw(rng, 0, 4) != 0) {
      node.children.push_back(random_preterminal(rng, opts));
    } else {
      node.children.push_back(random_phrase(rng, size, levels - 1, opts));
    }
  }
  return node;
}

inline ConstituencyTree random_tree(std::mt19937_64& rng, const TreeGenOptions& opts = {}) {
  const std::size_t length = draw(rng, 1, opts.max_tokens);
  return ConstituencyTree(random_phrase(rng, length, draw(rng, 2, opts.max_depth), opts));
}

// Relabels, re-brackets or leaves alone parts of `gold` to produce a
// plausible prediction with the same yield.
inline ConstituencyTree perturb(std::mt19937_64& rng, const ConstituencyTree& gold) {
  auto rec = [&](auto&& self, const Node& n) -> Node {
    if (n.is_preterminal()) return n;
    Node out = make_node(n.label, {});
    for (const auto& c : n.children) out.children.push_back(self(self, c));
    switch (draw(rng, 0, 5)) {
      case 0: out.label = random_phrase_label(rng); break;
      case 1:
        // Flatten one phrasal child into this node.
        for (std::size_t i = 0; i < out.children.size(); ++i) {
          if (!out.children[i].is_preterminal()) {
            auto grand = std::move(out.children[i].children);
            out.children.erase(out.children.begin() + static_cast<long>(i));
            out.children.insert(out.children.begin() + static_cast<long>(i), grand.begin(), grand.end());
            break;
          }
        }
        break;
      case 2:
        // Group the first two children under a new phrase.
        if (out.children.size() > 2) {
          Node group = make_node(random_phrase_label(rng), {out.children[0], out.children[1]});
          out.children.erase(out.children.begin(), out.children.begin() + 2);
          out.children.insert(out.children.begin(), std::move(group));
        }
        break;
      default: break;
    }
    return out;
  };
  return ConstituencyTree(rec(rec, gold.root()));
}

}  // namespace conparse::testgen
