// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#include "chainmpq/question/parser.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include "json.hpp"
#include <set>
#include <sstream>

#include "chainmpq/error.hpp"

namespace chainmpq::question {
namespace {

const std::vector<std::string>& DefaultPhrases() {
  static const std::vector<std::string> kPhrases = {
      "to the left of", "to the right of", "on the left of", "on the right of",
      "on top of",      "in front of",     "in the middle of", "next to",
      "close to",       "on the side of",  "under",          "underneath",
      "beneath",        "behind",          "above",          "below",
      "beside",         "near",            "inside",         "outside",
      "over",           "across",          "along",          "around",
      "against",        "between",         "into",           "onto",
      "with",           "at",              "on",             "in",
  };
  return kPhrases;
}

const std::vector<std::string>& DefaultVerbs() {
  static const std::vector<std::string> kVerbs = {
      "attach", "bite",   "block",   "brush",  "build",  "carry", "catch",
      "chase",  "chew",   "climb",   "contain", "cook",  "cover", "cross",
      "cut",    "dig",    "display", "drink",  "drive",  "eat",   "enter",
      "face",   "feed",   "fill",    "fly",    "follow", "grab",  "graze",
      "hang",   "have",   "hit",     "hold",   "hug",    "jump",  "kick",
      "kiss",   "lay",    "lead",    "lean",   "lick",   "lie",   "look",
      "touch",  "park",   "pet",     "pick",   "play",   "point", "pour",
      "pull",   "push",   "reach",   "read",   "ride",   "run",   "serve",
      "show",   "sit",    "ski",     "skate",  "sleep",  "smell", "stand",
      "support", "surf",  "swim",    "talk",   "throw",  "type",  "use",
      "walk",   "wash",   "watch",   "wear",   "write",  "own",   "wait",
  };
  return kVerbs;
}

bool IsArticle(std::string_view t) { return t == "a" || t == "an" || t == "the"; }

std::string Join(const std::vector<std::string>& tokens, std::size_t begin,
                 std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (!out.empty()) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string Capitalize(std::string_view s) {
  std::string out(s);
  if (!out.empty()) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  }
  return out;
}

}  // namespace

std::string_view to_string(Auxiliary aux) {
  switch (aux) {
    case Auxiliary::kDoes:
      return "does";
    case Auxiliary::kIs:
      return "is";
    case Auxiliary::kAre:
      return "are";
  }
  return "is";
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kLocateSubject:
      return "LocateSubject";
    case Role::kLocateObject:
      return "LocateObject";
    case Role::kMaskObject:
      return "MaskObject";
    case Role::kMaskSubject:
      return "MaskSubject";
    case Role::kMaskRelation:
      return "MaskRelation";
  }
  return "LocateSubject";
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) {
    std::string t;
    t.reserve(word.size());
    for (char c : word) {
      t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    const auto is_punct = [](char c) {
      return std::ispunct(static_cast<unsigned char>(c)) && c != '-';
    };
    while (!t.empty() && is_punct(t.back())) t.pop_back();
    std::size_t lead = 0;
    while (lead < t.size() && is_punct(t[lead])) ++lead;
    t.erase(0, lead);
    if (!t.empty()) tokens.push_back(std::move(t));
  }
  return tokens;
}

std::string normalize_phrase(std::string_view phrase) {
  const auto tokens = tokenize(phrase);
  std::size_t begin = 0;
  while (begin < tokens.size() && IsArticle(tokens[begin])) ++begin;
  return Join(tokens, begin, tokens.size());
}

RelationLexicon::RelationLexicon(std::vector<std::string> spatial_phrases,
                                 std::vector<std::string> verbs) {
  std::set<std::string> seen;
  for (auto& p : spatial_phrases) {
    const auto tokens = tokenize(p);
    std::string norm = Join(tokens, 0, tokens.size());
    if (norm.empty() || !seen.insert(norm).second) continue;
    phrases_.push_back(norm);
    phrase_tokens_.push_back(tokenize(norm));
  }
  std::stable_sort(phrase_tokens_.begin(), phrase_tokens_.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  std::set<std::string> seen_verbs;
  for (auto& v : verbs) {
    auto tokens = tokenize(v);
    if (tokens.size() != 1 || !seen_verbs.insert(tokens[0]).second) continue;
    verbs_.push_back(tokens[0]);
  }
}

const RelationLexicon& RelationLexicon::Default() {
  static const RelationLexicon kDefault(DefaultPhrases(), DefaultVerbs());
  return kDefault;
}

RelationLexicon RelationLexicon::FromJson(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("lexicon is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("spatial_phrases") ||
      !doc["spatial_phrases"].is_array()) {
    throw InvalidArgument("lexicon needs a \"spatial_phrases\" array");
  }
  std::vector<std::string> phrases;
  for (const auto& p : doc["spatial_phrases"]) {
    if (!p.is_string()) throw InvalidArgument("spatial phrase must be a string");
    phrases.push_back(p.get<std::string>());
  }
  std::vector<std::string> verbs = DefaultVerbs();
  if (doc.contains("verbs")) {
    if (!doc["verbs"].is_array()) throw InvalidArgument("\"verbs\" must be an array");
    verbs.clear();
    for (const auto& v : doc["verbs"]) {
      if (!v.is_string()) throw InvalidArgument("verb must be a string");
      verbs.push_back(v.get<std::string>());
    }
  }
  return RelationLexicon(std::move(phrases), std::move(verbs));
}

RelationLexicon RelationLexicon::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open lexicon " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return FromJson(buf.str());
}

std::size_t RelationLexicon::MatchAt(const std::vector<std::string>& tokens,
                                     std::size_t pos) const {
  for (const auto& phrase : phrase_tokens_) {
    if (pos + phrase.size() > tokens.size()) continue;
    if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + pos)) {
      return phrase.size();
    }
  }
  return 0;
}

bool RelationLexicon::IsVerbLike(std::string_view token) const {
  const auto known = [this](std::string_view stem) {
    return std::find(verbs_.begin(), verbs_.end(), stem) != verbs_.end();
  };
  if (known(token)) return true;
  const auto strip = [&](std::string_view suffix) -> std::string_view {
    if (token.size() > suffix.size() && token.ends_with(suffix)) {
      return token.substr(0, token.size() - suffix.size());
    }
    return {};
  };
  for (std::string_view suffix : {"s", "es", "ed", "d", "ing"}) {
    std::string_view stem = strip(suffix);
    if (stem.empty()) continue;
    if (known(stem)) return true;
    if (suffix == "ing") {
      // riding -> ride, running -> run
      if (known(std::string(stem) + "e")) return true;
      if (stem.size() >= 2 && stem[stem.size() - 1] == stem[stem.size() - 2] &&
          known(stem.substr(0, stem.size() - 1))) {
        return true;
      }
    }
  }
  return token.size() >= 5 && token.ends_with("ing");
}

RelationTriple parse_relational_question(std::string_view text,
                                         const RelationLexicon& lexicon) {
  const std::string raw(text);
  std::vector<std::string> tokens = tokenize(text);
  if (tokens.empty()) throw Unparseable(raw, "empty question");

  RelationTriple triple;
  triple.raw = raw;
  if (tokens[0] == "does") {
    triple.auxiliary = Auxiliary::kDoes;
  } else if (tokens[0] == "is") {
    triple.auxiliary = Auxiliary::kIs;
  } else if (tokens[0] == "are") {
    triple.auxiliary = Auxiliary::kAre;
  } else {
    throw Unparseable(raw, "no leading does/is/are");
  }
  tokens.erase(tokens.begin());

  const std::size_t n0 = tokens.size();
  if (n0 >= 3 && tokens[n0 - 3] == "in" && tokens[n0 - 2] == "the" &&
      tokens[n0 - 1] == "image") {
    tokens.resize(n0 - 3);
  }
  const std::size_t n = tokens.size();

  std::size_t subject_begin = 0;
  while (subject_begin < n && IsArticle(tokens[subject_begin])) ++subject_begin;
  if (subject_begin >= n) throw Unparseable(raw, "no subject");

  // The relation starts at the first marker after at least one subject token
  // and before the next article.
  std::size_t limit = n;
  for (std::size_t i = subject_begin + 1; i < n; ++i) {
    if (IsArticle(tokens[i])) {
      limit = i;
      break;
    }
  }
  const auto is_marker = [&](std::size_t i) {
    return lexicon.MatchAt(tokens, i) > 0 || tokens[i] == "not" ||
           lexicon.IsVerbLike(tokens[i]) ||
           (i + 1 < n && tokens[i + 1] == "than");
  };
  std::size_t start = n;
  for (std::size_t i = subject_begin + 1; i < limit; ++i) {
    if (is_marker(i)) {
      start = i;
      break;
    }
  }
  if (start == n) {
    if (triple.auxiliary != Auxiliary::kDoes || subject_begin + 1 >= limit) {
      throw Unparseable(raw, "no relation found");
    }
    start = subject_begin + 1;
  }

  std::size_t end = start;
  if (std::size_t len = lexicon.MatchAt(tokens, start); len > 0) {
    end = start + len;
  } else {
    end = start + 1;
    if (std::size_t tail = lexicon.MatchAt(tokens, end); tail > 0) end += tail;
    if (end < n && tokens[end] == "than") ++end;
  }
  if (end < n && !IsArticle(tokens[end])) {
    // Particles before the object's article stay with the relation.
    for (std::size_t j = end + 1; j < n; ++j) {
      if (IsArticle(tokens[j])) {
        end = j;
        break;
      }
    }
  }

  std::size_t object_begin = end;
  while (object_begin < n && IsArticle(tokens[object_begin])) ++object_begin;
  if (object_begin >= n) throw Unparseable(raw, "no object");

  triple.subject = Join(tokens, subject_begin, start);
  triple.relation = Join(tokens, start, end);
  triple.object = Join(tokens, object_begin, n);
  triple.negated = tokens[start] == "not";
  return triple;
}

std::array<SubQuestion, 5> generate_subquestions(const RelationTriple& t) {
  return {{
      {1, Role::kLocateSubject, "Where is the " + t.subject + "?", {t.subject}},
      {2, Role::kLocateObject, "Where is the " + t.object + "?", {t.object}},
      {3, Role::kMaskObject, "What is the " + t.subject + " " + t.relation + "?",
       {t.subject}},
      {4, Role::kMaskSubject, "What is " + t.relation + " the " + t.object + "?",
       {t.object}},
      {5, Role::kMaskRelation,
       "What is the relationship between the " + t.subject + " and the " +
           t.object + "?",
       {t.subject, t.object}},
  }};
}

std::string canonical_question(const RelationTriple& t) {
  return Capitalize(to_string(t.auxiliary)) + " a " + t.subject + " " +
         t.relation + " a " + t.object + " in the image?";
}

}  // namespace chainmpq::question
