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

#include "sepbench/prompts.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "sepbench/errors.hpp"

namespace sepbench {

namespace {

constexpr char kPlaceholder[] = "{captions}";
constexpr std::size_t kExpectedPerOperator = 50;

std::size_t count_placeholders(const std::string& pattern) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = pattern.find(kPlaceholder, pos)) != std::string::npos) {
    ++count;
    pos += sizeof(kPlaceholder) - 1;
  }
  return count;
}

}  // namespace

std::string to_string(SeparationOp op) {
  return op == SeparationOp::kExtract ? "extract" : "remove";
}

SeparationOp parse_operator(const std::string& text) {
  if (text == "extract") return SeparationOp::kExtract;
  if (text == "remove") return SeparationOp::kRemove;
  throw_error(Errc::kInvalidArgument, "unknown operator: " + text);
}

TemplateLibrary TemplateLibrary::parse(const std::string& tsv_content) {
  TemplateLibrary lib;
  std::set<int> seen_ids;
  std::istringstream in(tsv_content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    const std::size_t tab1 = line.find('\t');
    const std::size_t tab2 =
        tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    require(tab1 != std::string::npos && tab2 != std::string::npos, Errc::kAsset,
            "template line " + std::to_string(line_no) +
                ": expected id<TAB>operator<TAB>pattern");

    OperatorTemplate t;
    try {
      t.id = std::stoi(line.substr(0, tab1));
    } catch (const std::exception&) {
      throw_error(Errc::kAsset,
                  "template line " + std::to_string(line_no) + ": bad id");
    }
    t.op = parse_operator(line.substr(tab1 + 1, tab2 - tab1 - 1));
    t.pattern = line.substr(tab2 + 1);

    require(count_placeholders(t.pattern) == 1, Errc::kAsset,
            "template " + std::to_string(t.id) +
                ": pattern must contain {captions} exactly once");
    require(seen_ids.insert(t.id).second, Errc::kAsset,
            "duplicate template id " + std::to_string(t.id));
    lib.all_.push_back(t);
    (t.op == SeparationOp::kExtract ? lib.extract_ : lib.remove_).push_back(t);
  }

  require(lib.extract_.size() == kExpectedPerOperator, Errc::kAsset,
          "expected 50 extract templates, found " +
              std::to_string(lib.extract_.size()));
  require(lib.remove_.size() == kExpectedPerOperator, Errc::kAsset,
          "expected 50 remove templates, found " +
              std::to_string(lib.remove_.size()));
  return lib;
}

TemplateLibrary TemplateLibrary::load(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::kIo, "cannot open template asset: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

TemplateLibrary TemplateLibrary::builtin() {
  return parse(builtin_template_asset());
}

const OperatorTemplate& TemplateLibrary::by_id(int id) const {
  for (const auto& t : all_) {
    if (t.id == id) return t;
  }
  throw_error(Errc::kInvalidArgument,
              "no template with id " + std::to_string(id));
}

const std::vector<OperatorTemplate>& TemplateLibrary::for_operator(
    SeparationOp op) const {
  return op == SeparationOp::kExtract ? extract_ : remove_;
}

std::string join_captions(const std::vector<std::string>& captions) {
  require(!captions.empty(), Errc::kPrecondition, "no captions to join");
  if (captions.size() == 1) return captions[0];
  if (captions.size() == 2) return captions[0] + " and " + captions[1];
  std::string out;
  for (std::size_t i = 0; i + 1 < captions.size(); ++i) {
    out += captions[i];
    out += ", ";
  }
  out += "and " + captions.back();
  return out;
}

namespace {

PromptSpec realize(const OperatorTemplate& t,
                   const std::vector<std::string>& captions) {
  PromptSpec spec;
  spec.op = t.op;
  spec.captions = captions;
  spec.template_id = t.id;
  spec.text = t.pattern;
  const std::size_t pos = spec.text.find(kPlaceholder);
  spec.text.replace(pos, sizeof(kPlaceholder) - 1, join_captions(captions));
  return spec;
}

}  // namespace

PromptSpec compose_prompt(const TemplateLibrary& library, SeparationOp op,
                          const std::vector<std::string>& captions, Rng& rng) {
  const auto& pool = library.for_operator(op);
  require(!pool.empty(), Errc::kAsset, "no templates for operator");
  const auto& t = pool[rng.below(pool.size())];
  return realize(t, captions);
}

PromptSpec compose_prompt(const TemplateLibrary& library, SeparationOp op,
                          const std::vector<std::string>& captions,
                          int template_id) {
  const OperatorTemplate& t = library.by_id(template_id);
  require(t.op == op, Errc::kInvalidArgument,
          "template " + std::to_string(template_id) + " is a " +
              to_string(t.op) + " template, not " + to_string(op));
  return realize(t, captions);
}

std::string choose_caption(const std::vector<std::string>& captions, Rng& rng) {
  require(!captions.empty(), Errc::kMissingCaption,
          "clip has no caption available");
  return captions[rng.below(captions.size())];
}

}  // namespace sepbench
