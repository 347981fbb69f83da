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

#ifndef SEPBENCH_PROMPTS_HPP_
#define SEPBENCH_PROMPTS_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "sepbench/rng.hpp"

namespace sepbench {

enum class SeparationOp { kExtract, kRemove };

std::string to_string(SeparationOp op);
SeparationOp parse_operator(const std::string& text);

// One paraphrase of an extraction or removal instruction; the pattern
// contains the {captions} placeholder exactly once.
struct OperatorTemplate {
  int id = 0;
  SeparationOp op = SeparationOp::kExtract;
  std::string pattern;
};

struct PromptSpec {
  SeparationOp op = SeparationOp::kExtract;
  std::vector<std::string> captions;
  int template_id = 0;
  std::string text;
};

// The shipped library holds 100 templates, 50 per operator; loading
// validates the counts, unique ids and single-placeholder rule.
class TemplateLibrary {
 public:
  static TemplateLibrary load(const std::string& path);
  static TemplateLibrary parse(const std::string& tsv_content);
  static TemplateLibrary builtin();

  const OperatorTemplate& by_id(int id) const;
  const std::vector<OperatorTemplate>& for_operator(SeparationOp op) const;
  std::size_t size() const { return all_.size(); }

 private:
  std::vector<OperatorTemplate> all_;
  std::vector<OperatorTemplate> extract_;
  std::vector<OperatorTemplate> remove_;
};

// Raw TSV text of the built-in asset (generated from assets/templates.tsv).
const char* builtin_template_asset();

// "A", "A and B", "A, B, and C" (Oxford comma from three items up).
std::string join_captions(const std::vector<std::string>& captions);

PromptSpec compose_prompt(const TemplateLibrary& library, SeparationOp op,
                          const std::vector<std::string>& captions, Rng& rng);
PromptSpec compose_prompt(const TemplateLibrary& library, SeparationOp op,
                          const std::vector<std::string>& captions,
                          int template_id);

// Uniform draw among the captions available for one clip.
std::string choose_caption(const std::vector<std::string>& captions, Rng& rng);

}  // namespace sepbench

#endif  // SEPBENCH_PROMPTS_HPP_
