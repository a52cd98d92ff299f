#pragma once

#include <string>
#include <vector>

#include "protoloop/provider.hpp"

namespace protoloop::testing {

struct MalformedCase {
    GenerationKind kind;
    std::string raw;
    std::string path;  // expected SchemaError::path()
};

// Each entry breaks exactly one rule of the response schemas.
inline const std::vector<MalformedCase>& malformed_corpus() {
    static const std::vector<MalformedCase> corpus = {
        {GenerationKind::Spec, R"(not json at all)", "$"},
        {GenerationKind::Spec, R"(["specification"])", "$"},
        {GenerationKind::Spec, R"({})", "specification"},
        {GenerationKind::Spec, R"({"specification": 42})", "specification"},
        {GenerationKind::Spec, R"({"specification": ""})", "specification"},
        {GenerationKind::Data, R"({"rows": []})", "records"},
        {GenerationKind::Data, R"({"records": []})", "records"},
        {GenerationKind::Data, R"({"records": [{"id": 1}, "x"]})", "records[1]"},
        {GenerationKind::Data, R"({"records": [{}]})", "records[0]"},
        {GenerationKind::Plan, R"({"tasks": []})", "tasks"},
        {GenerationKind::Plan, R"({"steps": [{"title": "a", "description": ""}]})", "tasks"},
        {GenerationKind::Plan, R"({"tasks": [{"description": "no title"}]})", "tasks[0].title"},
        {GenerationKind::Plan, R"({"tasks": [{"title": "ok", "description": ""}, {"title": ""}]})",
         "tasks[1].title"},
        {GenerationKind::Plan, R"({"tasks": [{"title": "no description"}]})", "tasks[0].description"},
        {GenerationKind::Plan, R"({"tasks": "do everything"})", "tasks"},
        {GenerationKind::Snippets, R"({"snippets": []})", "snippets"},
        {GenerationKind::Snippets,
         R"({"snippets": [{"id": "a", "rationale": "", "anchor": {"kind": "after_match", "file": "app.js"}, "content": "x"}]})",
         "snippets[0].anchor.match"},
        {GenerationKind::Snippets,
         R"({"snippets": [{"id": "a", "rationale": "", "anchor": {"kind": "sideways", "file": "app.js"}, "content": "x"}]})",
         "snippets[0].anchor.kind"},
        {GenerationKind::Snippets,
         R"({"snippets": [{"id": "a", "rationale": "", "anchor": {"kind": "file_end", "file": "../x.js"}, "content": "x"}]})",
         "snippets[0].anchor.file"},
        {GenerationKind::Snippets,
         R"({"snippets": [{"id": "a", "rationale": "", "anchor": {"kind": "at_line", "file": "a.js"}, "content": "x"}]})",
         "snippets[0].anchor.line"},
        {GenerationKind::Snippets,
         R"({"snippets": [{"id": "a", "rationale": "", "anchor": {"kind": "at_line", "file": "a.js", "line": 0}, "content": "x"}]})",
         "snippets[0].anchor.line"},
        {GenerationKind::Snippets,
         R"({"snippets": [{"id": "a", "rationale": "", "anchor": {"kind": "file_end", "file": "a.js", "match": "x"}, "content": "x"}]})",
         "snippets[0].anchor.match"},
        {GenerationKind::Snippets,
         R"({"snippets": [{"id": "a", "rationale": "", "anchor": {"kind": "file_end", "file": "a.js"}, "content": ""}]})",
         "snippets[0].content"},
        {GenerationKind::Snippets,
         R"({"snippets": [{"rationale": "", "anchor": {"kind": "file_end", "file": "a.js"}, "content": "x"}]})",
         "snippets[0].id"},
        {GenerationKind::Snippets,
         R"({"snippets": [{"id": "a", "rationale": "", "anchor": {"kind": "file_end", "file": "a.js"}, "content": "x"},
                          {"id": "a", "rationale": "", "anchor": {"kind": "file_start", "file": "a.js"}, "content": "y"}]})",
         "snippets[1].id"},
        {GenerationKind::Snippets,
         R"({"snippets": [{"id": "a", "rationale": "", "anchor": {"kind": "file_end", "file": "a.js", "where": 3}, "content": "x"}]})",
         "snippets[0].anchor.where"},
        {GenerationKind::Snippets,
         R"({"snippets": [{"id": "a", "rationale": "", "anchor": {"kind": "before_match", "file": "a.js", "match": "a\nb"}, "content": "x"}]})",
         "snippets[0].anchor.match"},
        {GenerationKind::Snippets, R"({"snippets": [{"id": "a", "rationale": "", "content": "x"}]})",
         "snippets[0].anchor"},
        {GenerationKind::Redo,
         R"({"snippets": [{"id": "a", "rationale": "", "anchor": {"kind": "file_start", "file": "a.js", "occurrence": 2}, "content": "x"}]})",
         "snippets[0].anchor.occurrence"},
        {GenerationKind::Redo, R"({"snippets": {"id": "a"}})", "snippets"},
    };
    return corpus;
}

}  // namespace protoloop::testing
