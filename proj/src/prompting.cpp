#include "conparse/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace conparse {

namespace {

constexpr std::string_view kSingapore =
    "(S (NP (NNP Singapore)) (VP (VBZ is) (VP (VBN located) (PP (IN in) (NP (NNP Asia))))))";

bool is_table_char(char c) { return punctuation_symbols().contains(c); }

bool all_table_chars(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), is_table_char);
}

// Decodes a run of concatenated symbols; nullopt if `s` is not such a run.
std::optional<std::string> decode_symbol_run(std::string_view s) {
  std::string out;
  while (!s.empty()) {
    bool matched = false;
    for (const auto& [c, sym] : punctuation_symbols()) {
      if (s.starts_with(sym)) {
        out += c;
        s.remove_prefix(sym.size());
        matched = true;
        break;
      }
    }
    if (!matched) return std::nullopt;
  }
  if (out.empty()) return std::nullopt;
  return out;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

void require_text(std::string_view text, std::string_view section) {
  if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) {
    throw PromptError(PromptErrorKind::EmptySection, "prompt section '" + std::string(section) + "' is empty");
  }
}

void section(std::string& out, std::string_view title, std::string_view body) {
  out += title;
  out += ":\n";
  out += body;
  out += "\n\n";
}

}  // namespace

const std::map<char, std::string>& punctuation_symbols() {
  static const std::map<char, std::string> table = {
      {'.', "_PERIOD_"}, {',', "_COMMA_"}, {':', "_COLON_"}, {';', "_SEMICOLON_"}, {'?', "_QMARK_"},
      {'!', "_EMARK_"},  {'"', "_QUOTE_"}, {'\'', "_APOS_"}, {'(', "-LRB-"},       {')', "-RRB-"},
  };
  return table;
}

std::vector<std::string> tokenize(std::string_view sentence) {
  std::vector<std::string> out;
  std::istringstream in{std::string(sentence)};
  std::string word;
  while (in >> word) {
    if (all_table_chars(word)) {
      out.push_back(word);
      continue;
    }
    std::size_t first = 0;
    while (is_table_char(word[first])) out.emplace_back(1, word[first++]);
    std::size_t last = word.size();
    while (is_table_char(word[last - 1])) --last;
    out.push_back(word.substr(first, last - first));
    for (std::size_t i = last; i < word.size(); ++i) out.emplace_back(1, word[i]);
  }
  return out;
}

std::string preprocess_token(std::string_view token) {
  const auto& table = punctuation_symbols();
  if (all_table_chars(token)) {
    std::string out;
    for (char c : token) out += table.at(c);
    return out;
  }
  std::string out;
  for (char c : token) {
    if (c == '(' || c == ')') {
      out += table.at(c);
    } else {
      out += c;
    }
  }
  return out;
}

std::string postprocess_token(std::string_view token) {
  if (auto run = decode_symbol_run(token)) return *run;
  return replace_all(replace_all(std::string(token), "-LRB-", "("), "-RRB-", ")");
}

std::vector<std::string> preprocess_tokens(std::span<const std::string> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(preprocess_token(t));
  return out;
}

std::vector<std::string> preprocess(std::string_view sentence) { return preprocess_tokens(tokenize(sentence)); }

std::vector<std::string> postprocess(std::span<const std::string> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(postprocess_token(t));
  return out;
}

ConstituencyTree preprocess_tree(const ConstituencyTree& tree) {
  return map_words(tree, [](const std::string& w) { return preprocess_token(w); });
}

ConstituencyTree postprocess_tree(const ConstituencyTree& tree) {
  return map_words(tree, [](const std::string& w) { return postprocess_token(w); });
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string_view to_string(ExemplarKind kind) { return kind == ExemplarKind::Invalid ? "invalid" : "unfaithful"; }

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    const char c = tmpl[i];
    if ((c == '{' || c == '}') && i + 1 < tmpl.size() && tmpl[i + 1] == c) {
      out += c;
      ++i;
    } else if (c == '{') {
      const auto close = tmpl.find('}', i);
      if (close == std::string_view::npos) {
        throw PromptError(PromptErrorKind::UnknownPlaceholder, "unterminated placeholder in template");
      }
      const std::string name(tmpl.substr(i + 1, close - i - 1));
      auto it = values.find(name);
      if (it == values.end()) {
        throw PromptError(PromptErrorKind::UnknownPlaceholder, "unknown placeholder {" + name + "}");
      }
      out += it->second;
      i = close;
    } else {
      out += c;
    }
  }
  return out;
}

const PromptTemplates& default_templates() {
  static const PromptTemplates templates = {
      "Constituency parsing analyses a sentence into nested constituents. Each constituent carries a label "
      "at one of three levels.\n"
      "Clause-level labels: S (simple declarative clause), SBAR (clause introduced by a subordinating "
      "conjunction), SBARQ (direct question introduced by a wh-word), SINV (inverted declarative), SQ "
      "(yes/no question).\n"
      "Phrase-level labels: ADJP, ADVP, CONJP, FRAG, INTJ, LST, NAC, NP, NX, PP, PRN, PRT, QP, RRC, UCP, VP, "
      "WHADJP, WHADVP, WHNP, WHPP, X.\n"
      "Word-level labels are part-of-speech tags such as NN, NNS, NNP, VB, VBD, VBZ, VBN, JJ, RB, IN, DT, CD, "
      "PRP, CC, TO and MD. Every word of the sentence is covered by exactly one word-level constituent.\n"
      "Punctuation in the sentence is written as symbols such as _PERIOD_, _COMMA_, -LRB- and -RRB-.",
      {
          {Strategy::Bracket,
           "Output the constituency tree of the sentence in Task Input in bracketed form. Wrap every word "
           "as (TAG word) and every larger constituent as (LABEL ...). Keep the words of the sentence "
           "unchanged and in order, and output nothing but the tree.\n"
           "Example: {example}"},
          {Strategy::Transition,
           "Output the constituency tree of the sentence in Task Input as a sequence of actions separated "
           "by spaces. NT(X) opens a constituent labeled X, SHIFT(TAG word) attaches the next word with its "
           "tag, and REDUCE closes the most recently opened constituent. Shift every word of the sentence "
           "exactly once and in order, and output nothing but the actions.\n"
           "Example: {example}"},
          {Strategy::Span,
           "Output the constituency tree of the sentence in Task Input as one line per constituent, in "
           "top-down, left-to-right order. Each line reads \"<words of the constituent> is a <LABEL>.\" and "
           "word-level constituents use their part-of-speech tag as the label. Output nothing but these "
           "lines.\n"
           "Example:\n{example}"},
      },
      "The following erroneous trees were produced for other sentences. Each one is followed by a "
      "description of its error. Avoid making the same kinds of mistakes.",
  };
  return templates;
}

PromptTemplates load_templates(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::runtime_error("template directory not found: " + dir);
  PromptTemplates t = default_templates();
  const fs::path base(dir);
  if (fs::exists(base / "task_introduction.txt")) t.task_introduction = read_file(base / "task_introduction.txt");
  for (auto s : {Strategy::Bracket, Strategy::Transition, Strategy::Span}) {
    const auto file = base / ("instruction_" + std::string(to_string(s)) + ".txt");
    if (fs::exists(file)) t.instructions[s] = read_file(file);
  }
  if (fs::exists(base / "error_avoiding.txt")) t.error_avoiding = read_file(base / "error_avoiding.txt");
  return t;
}

const std::vector<ErrorExemplar>& default_exemplars() {
  static const std::vector<ErrorExemplar> exemplars = {
      {"Singapore is located in Asia",
       "(S (NP (NNP)) (VP (VBZ is) (VP (VBN located) (PP (IN in) (NP (NNP Asia))))))",
       "The constituent (NNP) lacks a word.", ExemplarKind::Invalid},
      {"The plan had been putting pressure on prices _PERIOD_",
       "(S (NP (DT The) (NN plan)) (VP (VBD had been putting) (NP (NN pressure)) (PP (IN on) (NP (NNS prices)))) "
       "(. _PERIOD_))",
       "The constituent (VBD had been putting) contains more than one word.", ExemplarKind::Invalid},
      {"Singapore is located in Asia",
       "(S (NP (NNP Singapore)) (VP (VBZ is) (VP (VBN situated) (PP (IN in) (NP (NNP Asia))))))",
       "'situated' does not exist in the original input sentence.", ExemplarKind::Unfaithful},
      {"Shares fell in early trading _PERIOD_",
       "(S (NP (NNS Shares)) (VP (VBD fell) (PP (IN in) (NP (JJ early) (NN trading))) (PP (IN in) (NP (JJ early) "
       "(NN trading)))) (. _PERIOD_))",
       "The tree contains 9 words but the input sentence has 6 words. The words 'in early trading' are repeated.",
       ExemplarKind::Unfaithful},
  };
  return exemplars;
}

Demonstration make_demonstration(const ConstituencyTree& tree, Strategy strategy) {
  const auto pre = preprocess_tree(tree);
  return {join_tokens(yield_words(pre)), encode(pre, strategy).payload};
}

PromptSpec make_prompt_spec(const PromptTemplates& templates, Strategy strategy, std::string task_input,
                            std::vector<Demonstration> demonstrations, std::vector<ErrorExemplar> exemplars) {
  const std::map<std::string, std::string> values = {
      {"strategy", std::string(to_string(strategy))},
      {"example", encode(parse_bracketed(kSingapore), strategy).payload},
  };
  PromptSpec spec;
  spec.task_introduction = render_template(templates.task_introduction, values);
  auto it = templates.instructions.find(strategy);
  if (it == templates.instructions.end()) {
    it = default_templates().instructions.find(strategy);
  }
  spec.instruction = render_template(it->second, values);
  spec.demonstrations = std::move(demonstrations);
  spec.error_avoiding_instruction = render_template(templates.error_avoiding, values);
  spec.error_avoiding = std::move(exemplars);
  spec.task_input = std::move(task_input);
  return spec;
}

std::string build_prompt(const PromptMode& mode, const PromptSpec& spec, bool require_both_kinds) {
  require_text(spec.task_introduction, "Task Introduction");
  require_text(spec.instruction, "Instruction");
  require_text(spec.task_input, "Task Input");

  const std::size_t shots = mode.kind == PromptMode::Kind::ZeroShot ? 0 : mode.shots;
  if (mode.kind == PromptMode::Kind::FewShot && shots == 0) {
    throw PromptError(PromptErrorKind::MissingDemonstrations, "few-shot prompting needs at least one demonstration");
  }
  if (shots > spec.demonstrations.size()) {
    throw PromptError(PromptErrorKind::MissingDemonstrations,
                      "requested " + std::to_string(shots) + " demonstrations but only " +
                          std::to_string(spec.demonstrations.size()) + " are available");
  }

  std::string out;
  section(out, "Task Introduction", spec.task_introduction);
  section(out, "Instruction", spec.instruction);

  if (mode.kind == PromptMode::Kind::LES) {
    const auto count = [&](ExemplarKind k) {
      return std::count_if(spec.error_avoiding.begin(), spec.error_avoiding.end(),
                           [k](const ErrorExemplar& e) { return e.kind == k; });
    };
    if (spec.error_avoiding.empty() ||
        (require_both_kinds && (count(ExemplarKind::Invalid) == 0 || count(ExemplarKind::Unfaithful) == 0))) {
      throw PromptError(PromptErrorKind::MissingExemplars,
                        "error-avoiding prompting needs at least one invalid and one unfaithful exemplar");
    }
    std::string body = spec.error_avoiding_instruction.empty() ? default_templates().error_avoiding
                                                               : spec.error_avoiding_instruction;
    std::size_t n = 0;
    for (const auto& e : spec.error_avoiding) {
      if (e.annotation.empty()) throw PromptError(PromptErrorKind::EmptySection, "exemplar without annotation");
      body += "\n\nErroneous sample " + std::to_string(++n) + " (" + std::string(to_string(e.kind)) + " tree):\n";
      body += "Sentence: " + e.sentence + "\n";
      body += "Tree: " + e.erroneous_tree + "\n";
      body += "Error: " + e.annotation;
    }
    section(out, "Error-Avoiding Instruction", body);
  }

  if (shots > 0) {
    std::string body;
    for (std::size_t i = 0; i < shots; ++i) {
      if (i > 0) body += "\n\n";
      body += "Sentence: " + spec.demonstrations[i].sentence + "\n";
      body += "Tree:\n" + spec.demonstrations[i].tree;
    }
    section(out, "Training Instances", body);
  }

  if (!spec.feedback.empty()) section(out, "Feedback", spec.feedback);

  out += "Task Input:\nSentence: " + spec.task_input + "\nTree:\n";
  return out;
}

std::string build_checker_prompt(CheckerRole role, std::string_view tree, std::string_view sentence,
                                 std::span<const CheckerDemo> demos) {
  std::string intro;
  std::string instruction;
  if (role == CheckerRole::ValidityAgent) {
    intro =
        "You are a validity checker for constituency trees written in bracketed form. A valid tree has "
        "balanced brackets, a single root, a label on every constituent, and exactly one word in every "
        "word-level constituent.";
    instruction =
        "Assess whether the tree in Task Input is structurally well formed. Report every problem you find. "
        "Reply with one JSON object and nothing else, in the form\n"
        "{\"valid\": true or false, \"errors\": [{\"kind\": \"BracketUnmatched\" | \"MissingWord\" | "
        "\"MoreThanOneWord\" | \"Other\", \"location\": the offending constituent or null, \"message\": a "
        "one-sentence description}]}\n"
        "Use an empty error list when the tree is valid.";
  } else {
    intro =
        "You are a faithfulness checker for constituency trees. A faithful tree contains exactly the words "
        "of the input sentence, in the same order, with nothing added, dropped or changed.";
    instruction =
        "Compare the words of the tree in Task Input with the sentence. Reply with one JSON object and "
        "nothing else, in the form\n"
        "{\"faithful\": true or false, \"errors\": [{\"kind\": \"OverGeneration\" | \"WordMismatch\" | "
        "\"PredictionFailure\", \"sub\": \"Repetition\" | \"ContinueWriting\" | \"Other\" for OverGeneration, "
        "otherwise null, \"detail\": a one-sentence description, \"positions\": [0-based word positions]}]}\n"
        "Use an empty error list when the tree is faithful.";
  }

  std::string out;
  section(out, "Task Introduction", intro);
  section(out, "Instruction", instruction);
  if (!demos.empty()) {
    std::string body;
    for (std::size_t i = 0; i < demos.size(); ++i) {
      if (i > 0) body += "\n\n";
      body += "Sentence: " + demos[i].sentence + "\n";
      body += "Tree: " + demos[i].tree + "\n";
      body += "Reply: " + demos[i].reply;
    }
    section(out, "Training Instances", body);
  }
  out += "Task Input:\nSentence: " + std::string(sentence) + "\nTree: " + std::string(tree) + "\nReply:\n";
  return out;
}

std::string FinetuneRecord::sequence() const { return instruction + "\n" + input + "\n" + output; }

std::size_t FinetuneRecord::length() const {
  std::istringstream in(sequence());
  std::size_t n = 0;
  std::string piece;
  while (in >> piece) ++n;
  return n;
}

std::string default_finetune_instruction(Strategy strategy) {
  switch (strategy) {
    case Strategy::Bracket: return "Parse the sentence into a bracketed constituency tree.";
    case Strategy::Transition: return "Parse the sentence into a sequence of NT, SHIFT and REDUCE actions.";
    case Strategy::Span: return "Parse the sentence into constituent lines of the form \"<words> is a <LABEL>.\"";
  }
  return {};
}

std::vector<FinetuneRecord> export_finetune_records(std::span<const ConstituencyTree> treebank, Strategy strategy) {
  if (treebank.empty()) throw std::invalid_argument("cannot export an empty treebank");
  std::vector<FinetuneRecord> out;
  out.reserve(treebank.size());
  const std::string instruction = default_finetune_instruction(strategy);
  for (const auto& tree : treebank) {
    const auto demo = make_demonstration(tree, strategy);
    out.push_back({instruction, demo.sentence, demo.tree});
  }
  return out;
}

ConstituencyTree decode_record(const FinetuneRecord& record, Strategy strategy) {
  const std::string z = record.sequence();
  // The tree is whatever follows the instruction and input lines.
  const auto first = z.find('\n');
  const auto second = z.find('\n', first + 1);
  return decode({strategy, z.substr(second + 1)});
}

nlohmann::json to_json(const FinetuneRecord& record) {
  return {{"instruction", record.instruction}, {"input", record.input}, {"output", record.output}};
}

}  // namespace conparse
