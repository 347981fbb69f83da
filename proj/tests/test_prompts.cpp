// Copyright 2026 The sepbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "sepbench/errors.hpp"
#include "sepbench/prompts.hpp"
#include "testutil.hpp"

using namespace sepbench;

TEST_CASE("builtin asset: 100 templates, 50 per operator") {
  const TemplateLibrary lib = TemplateLibrary::builtin();
  CHECK(lib.size() == 100);
  CHECK(lib.for_operator(SeparationOp::kExtract).size() == 50);
  CHECK(lib.for_operator(SeparationOp::kRemove).size() == 50);
}

TEST_CASE("asset validation: wrong counts rejected") {
  std::string tsv;
  for (int i = 0; i < 50; ++i) {
    tsv += std::to_string(i) + "\textract\tKeep {captions} v" +
           std::to_string(i) + ".\n";
  }
  for (int i = 0; i < 49; ++i) {
    tsv += std::to_string(50 + i) + "\tremove\tDrop {captions} v" +
           std::to_string(i) + ".\n";
  }
  try {
    TemplateLibrary::parse(tsv);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kAsset);
  }
}

TEST_CASE("asset validation: missing placeholder rejected") {
  try {
    TemplateLibrary::parse("0\textract\tKeep the target please.\n");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kAsset);
  }
}

TEST_CASE("asset validation: duplicate ids rejected") {
  const std::string tsv =
      "3\textract\tKeep {captions}.\n3\tremove\tDrop {captions}.\n";
  try {
    TemplateLibrary::parse(tsv);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kAsset);
  }
}

TEST_CASE("join_captions rules") {
  CHECK(join_captions({"dog barking"}) == "dog barking");
  CHECK(join_captions({"dog barking", "rain"}) == "dog barking and rain");
  CHECK(join_captions({"a", "b", "c"}) == "a, b, and c");
  CHECK(join_captions({"a", "b", "c", "d"}) == "a, b, c, and d");
  CHECK_THROWS_AS(join_captions({}), Error);
}

TEST_CASE("compose_prompt: forced template substitution") {
  const TemplateLibrary lib = TemplateLibrary::builtin();
  // Template 50 is "Remove {captions} from the audio."
  const PromptSpec spec =
      compose_prompt(lib, SeparationOp::kRemove, {"rain"}, 50);
  CHECK(spec.text == "Remove rain from the audio.");
  CHECK(spec.template_id == 50);
}

TEST_CASE("compose_prompt: deterministic under a seed") {
  const TemplateLibrary lib = TemplateLibrary::builtin();
  Rng a(77);
  Rng b(77);
  const PromptSpec s1 = compose_prompt(lib, SeparationOp::kExtract, {"a"}, a);
  const PromptSpec s2 = compose_prompt(lib, SeparationOp::kExtract, {"a"}, b);
  CHECK(s1.text == s2.text);
  CHECK(s1.template_id == s2.template_id);
}

TEST_CASE("compose_prompt: operator/template mismatch") {
  const TemplateLibrary lib = TemplateLibrary::builtin();
  try {
    compose_prompt(lib, SeparationOp::kExtract, {"a"}, 50);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kInvalidArgument);
  }
}

TEST_CASE("every realized prompt contains each caption exactly once") {
  const TemplateLibrary lib = TemplateLibrary::builtin();
  const std::vector<std::string> captions = {"dog barking", "heavy rain",
                                             "glass shattering"};
  for (const auto op : {SeparationOp::kExtract, SeparationOp::kRemove}) {
    for (const auto& t : lib.for_operator(op)) {
      const PromptSpec spec = compose_prompt(lib, op, captions, t.id);
      for (const auto& caption : captions) {
        std::size_t count = 0;
        std::size_t pos = 0;
        while ((pos = spec.text.find(caption, pos)) != std::string::npos) {
          ++count;
          pos += caption.size();
        }
        CHECK(count == 1);
      }
    }
  }
}

TEST_CASE("extract and remove realizations never collide") {
  const TemplateLibrary lib = TemplateLibrary::builtin();
  for (const auto& captions :
       std::vector<std::vector<std::string>>{{"rain"}, {"a", "b"}}) {
    std::set<std::string> extract_texts;
    for (const auto& t : lib.for_operator(SeparationOp::kExtract)) {
      extract_texts.insert(
          compose_prompt(lib, SeparationOp::kExtract, captions, t.id).text);
    }
    CHECK(extract_texts.size() == 50);
    for (const auto& t : lib.for_operator(SeparationOp::kRemove)) {
      const PromptSpec spec =
          compose_prompt(lib, SeparationOp::kRemove, captions, t.id);
      CHECK(extract_texts.count(spec.text) == 0);
    }
  }
}

TEST_CASE("template draw is uniform (chi-squared, 1e4 draws)") {
  const TemplateLibrary lib = TemplateLibrary::builtin();
  Rng rng(123);
  std::map<int, int> counts;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    counts[compose_prompt(lib, SeparationOp::kExtract, {"x"}, rng)
               .template_id]++;
  }
  CHECK(counts.size() == 50);
  const double expected = draws / 50.0;
  double chi2 = 0.0;
  for (const auto& [id, n] : counts) {
    const double d = n - expected;
    chi2 += d * d / expected;
  }
  // 99th percentile of chi-squared with 49 degrees of freedom.
  CHECK(chi2 < 74.92);
}

TEST_CASE("choose_caption: identity, uniformity, and the empty error") {
  Rng rng(9);
  CHECK(choose_caption({"only"}, rng) == "only");

  std::map<std::string, int> counts;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    counts[choose_caption({"a", "b", "c"}, rng)]++;
  }
  for (const auto& [caption, n] : counts) {
    CHECK(std::abs(n / static_cast<double>(draws) - 1.0 / 3.0) < 0.02);
  }

  try {
    choose_caption({}, rng);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kMissingCaption);
  }
}
