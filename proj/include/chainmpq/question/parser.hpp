// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace chainmpq::question {

enum class Auxiliary { kDoes, kIs, kAre };

std::string_view to_string(Auxiliary aux);

// (subject, relation, object) from a yes/no relational question. Noun
// phrases are lowercase with articles removed.
struct RelationTriple {
  std::string subject;
  std::string relation;
  std::string object;
  Auxiliary auxiliary = Auxiliary::kIs;
  // Relation begins with "not"; the negation stays folded into `relation`.
  bool negated = false;
  // Text the triple was parsed from; not part of equality.
  std::string raw;

  friend bool operator==(const RelationTriple& a, const RelationTriple& b) {
    return a.subject == b.subject && a.relation == b.relation &&
           a.object == b.object && a.auxiliary == b.auxiliary &&
           a.negated == b.negated;
  }
};

enum class Role {
  kLocateSubject,
  kLocateObject,
  kMaskObject,
  kMaskSubject,
  kMaskRelation,
};

std::string_view to_string(Role role);

struct SubQuestion {
  int index = 0;  // 1..5
  Role role = Role::kLocateSubject;
  std::string text;
  std::vector<std::string> keywords;
};

// Multiword spatial predicates plus a verb list used to find where the
// relation starts. Phrases are matched longest-first at each position.
class RelationLexicon {
 public:
  RelationLexicon(std::vector<std::string> spatial_phrases,
                  std::vector<std::string> verbs);

  static const RelationLexicon& Default();
  // {"spatial_phrases": [...], "verbs": [...]}; "verbs" is optional and
  // defaults to the built-in list.
  static RelationLexicon FromJson(std::string_view json_text);
  static RelationLexicon Load(const std::filesystem::path& path);

  const std::vector<std::string>& spatial_phrases() const { return phrases_; }
  const std::vector<std::string>& verbs() const { return verbs_; }

  // Token count of the longest phrase starting at tokens[pos], or 0.
  std::size_t MatchAt(const std::vector<std::string>& tokens,
                      std::size_t pos) const;
  bool IsVerbLike(std::string_view token) const;

 private:
  std::vector<std::string> phrases_;  // deduplicated, original order
  std::vector<std::vector<std::string>> phrase_tokens_;  // longest first
  std::vector<std::string> verbs_;
};

RelationTriple parse_relational_question(
    std::string_view text,
    const RelationLexicon& lexicon = RelationLexicon::Default());

std::array<SubQuestion, 5> generate_subquestions(const RelationTriple& triple);

// "<Aux> a [S] [R] a [O] in the image?"
std::string canonical_question(const RelationTriple& triple);

// Lowercases and strips leading articles: "The Trash Bin" -> "trash bin".
std::string normalize_phrase(std::string_view phrase);

std::vector<std::string> tokenize(std::string_view text);

}  // namespace chainmpq::question
