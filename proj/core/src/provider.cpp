#include "protoloop/provider.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>

#include "protoloop/error.hpp"

namespace protoloop {
namespace {

#include "prompt_templates.inc"

constexpr std::array<std::pair<GenerationKind, std::string_view>, 5> kKindNames{{
    {GenerationKind::Spec, "spec"},
    {GenerationKind::Data, "data"},
    {GenerationKind::Plan, "plan"},
    {GenerationKind::Snippets, "snippets"},
    {GenerationKind::Redo, "redo"},
}};

std::string at_index(std::string_view base, std::size_t i) {
    return std::string(base) + "[" + std::to_string(i) + "]";
}

std::string join(std::string_view base, std::string_view field) {
    return base.empty() ? std::string(field) : std::string(base) + "." + std::string(field);
}

const nlohmann::json& require(const nlohmann::json& obj, std::string_view base,
                              std::string_view field) {
    auto it = obj.find(field);
    if (it == obj.end()) throw SchemaError(join(base, field), "required");
    return *it;
}

std::string require_string(const nlohmann::json& obj, std::string_view base,
                           std::string_view field, bool non_empty) {
    const auto& v = require(obj, base, field);
    if (!v.is_string()) throw SchemaError(join(base, field), "expected string");
    auto s = v.get<std::string>();
    if (non_empty && s.empty()) throw SchemaError(join(base, field), "non-empty");
    return s;
}

const nlohmann::json& require_array(const nlohmann::json& obj, std::string_view field) {
    const auto& v = require(obj, "", field);
    if (!v.is_array()) throw SchemaError(std::string(field), "expected array");
    if (v.empty()) throw SchemaError(std::string(field), "non-empty");
    return v;
}

std::size_t positive_integer(const nlohmann::json& obj, std::string_view base,
                             std::string_view field) {
    const auto& v = obj.at(std::string(field));
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
        throw SchemaError(join(base, field), "expected positive integer");
    }
    return v.get<std::size_t>();
}

Snippet parse_snippet(const nlohmann::json& doc, const std::string& base) {
    if (!doc.is_object()) throw SchemaError(base, "expected object");
    Snippet s;
    s.id = require_string(doc, base, "id", true);
    s.rationale = require_string(doc, base, "rationale", false);

    const std::string abase = join(base, "anchor");
    const auto& anchor = require(doc, base, "anchor");
    if (!anchor.is_object()) throw SchemaError(abase, "expected object");
    for (const auto& [key, _] : anchor.items()) {
        static const std::set<std::string> kFields{"kind", "file", "match", "line", "occurrence"};
        if (!kFields.contains(key)) throw SchemaError(join(abase, key), "unexpected field");
    }
    auto kind_text = require_string(anchor, abase, "kind", true);
    auto kind = anchor_kind_from_string(kind_text);
    if (!kind) throw SchemaError(join(abase, "kind"), "unknown anchor kind '" + kind_text + "'");
    s.anchor.kind = *kind;
    s.anchor.file = require_string(anchor, abase, "file", true);
    try {
        validate_relative_path(s.anchor.file);
    } catch (const Error&) {
        throw SchemaError(join(abase, "file"), "must be a relative path inside the workspace");
    }

    const bool wants_match = *kind == AnchorKind::AfterMatch || *kind == AnchorKind::BeforeMatch;
    if (wants_match) {
        auto match = require_string(anchor, abase, "match", true);
        if (match.find('\n') != std::string::npos) {
            throw SchemaError(join(abase, "match"), "must be a single line");
        }
        s.anchor.match = std::move(match);
    } else if (anchor.contains("match")) {
        throw SchemaError(join(abase, "match"), "not allowed for " + kind_text);
    }

    if (*kind == AnchorKind::AtLine) {
        require(anchor, abase, "line");
        s.anchor.line = positive_integer(anchor, abase, "line");
    } else if (anchor.contains("line")) {
        throw SchemaError(join(abase, "line"), "not allowed for " + kind_text);
    }

    if (anchor.contains("occurrence")) {
        if (!wants_match) throw SchemaError(join(abase, "occurrence"), "not allowed for " + kind_text);
        s.anchor.occurrence = positive_integer(anchor, abase, "occurrence");
    }

    s.content = require_string(doc, base, "content", *kind != AnchorKind::CreateFile);
    return s;
}

std::string render_plan(const nlohmann::json& plan) {
    std::string out;
    for (const auto& t : plan.at("tasks")) {
        out += std::to_string(t.at("ordinal").get<std::size_t>()) + ". [" +
               t.at("status").get<std::string>() + "] " + t.at("title").get<std::string>() +
               "\n   " + t.at("description").get<std::string>() + "\n";
    }
    return out;
}

void replace_all(std::string& text, std::string_view placeholder, std::string_view value) {
    std::size_t pos = 0;
    while ((pos = text.find(placeholder, pos)) != std::string::npos) {
        text.replace(pos, placeholder.size(), value);
        pos += value.size();
    }
}

}  // namespace

std::string_view to_string(GenerationKind kind) noexcept {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "spec";
}

std::optional<GenerationKind> generation_kind_from_string(std::string_view text) noexcept {
    for (const auto& [k, name] : kKindNames) {
        if (name == text) return k;
    }
    return std::nullopt;
}

void validate_request(const GenerationRequest& request) {
    const auto& c = request.context;
    struct Need {
        bool goal, specification, plan, task, workspace, feedback, failed;
    };
    Need need{};
    bool feedback_optional = false;
    switch (request.kind) {
        case GenerationKind::Spec:
            need = {true, false, false, false, false, false, false};
            feedback_optional = true;
            break;
        case GenerationKind::Data:
            need = {true, true, false, false, false, false, false};
            break;
        case GenerationKind::Plan:
            need = {true, true, false, false, false, false, false};
            feedback_optional = true;
            break;
        case GenerationKind::Snippets:
            need = {false, true, true, true, true, false, false};
            break;
        case GenerationKind::Redo:
            need = {false, true, true, true, true, true, true};
            break;
    }
    auto check = [&](bool present, bool required, std::string_view field, bool optional = false) {
        if (required && !present) {
            fail(ErrorCode::InvalidRequest,
                 std::string(to_string(request.kind)) + " request needs " + std::string(field));
        }
        if (!required && present && !optional) {
            fail(ErrorCode::InvalidRequest, std::string(to_string(request.kind)) +
                                                " request must not carry " + std::string(field));
        }
    };
    check(c.goal.has_value(), need.goal, "goal");
    check(c.specification.has_value(), need.specification, "specification");
    check(c.plan.has_value(), need.plan, "plan");
    check(c.task.has_value(), need.task, "task");
    check(c.workspace_summary.has_value(), need.workspace, "workspace_summary");
    check(c.feedback.has_value(), need.feedback, "feedback", feedback_optional);
    check(c.failed_snippets.has_value(), need.failed, "failed_snippets");
    if (need.goal && c.goal->empty()) fail(ErrorCode::InvalidRequest, "empty goal");
}

std::string request_key(const GenerationRequest& request) {
    const auto& c = request.context;
    switch (request.kind) {
        case GenerationKind::Spec:
        case GenerationKind::Data:
            return c.goal.value_or("");
        case GenerationKind::Plan:
            return c.specification.value_or("");
        case GenerationKind::Snippets:
            return c.task ? c.task->title : "";
        case GenerationKind::Redo:
            return c.feedback.value_or("");
    }
    return {};
}

GenerationResponse validate_response(GenerationKind kind, const nlohmann::json& doc) {
    if (!doc.is_object()) throw SchemaError("$", "expected object");
    GenerationResponse out;
    out.kind = kind;
    switch (kind) {
        case GenerationKind::Spec: {
            out.payload = SpecPayload{require_string(doc, "", "specification", true)};
            out.document = {{"specification", out.specification()}};
            break;
        }
        case GenerationKind::Data: {
            const auto& records = require_array(doc, "records");
            for (std::size_t i = 0; i < records.size(); ++i) {
                if (!records[i].is_object()) throw SchemaError(at_index("records", i), "expected object");
                if (records[i].empty()) throw SchemaError(at_index("records", i), "non-empty");
            }
            out.payload = DataPayload{records};
            out.document = {{"records", records}};
            break;
        }
        case GenerationKind::Plan: {
            const auto& tasks = require_array(doc, "tasks");
            PlanPayload plan;
            nlohmann::json canonical = nlohmann::json::array();
            for (std::size_t i = 0; i < tasks.size(); ++i) {
                const auto base = at_index("tasks", i);
                if (!tasks[i].is_object()) throw SchemaError(base, "expected object");
                TaskDraft d{require_string(tasks[i], base, "title", true),
                            require_string(tasks[i], base, "description", false)};
                canonical.push_back({{"title", d.title}, {"description", d.description}});
                plan.tasks.push_back(std::move(d));
            }
            out.payload = std::move(plan);
            out.document = {{"tasks", std::move(canonical)}};
            break;
        }
        case GenerationKind::Snippets:
        case GenerationKind::Redo: {
            const auto& items = require_array(doc, "snippets");
            SnippetsPayload payload;
            std::set<std::string> ids;
            nlohmann::json canonical = nlohmann::json::array();
            for (std::size_t i = 0; i < items.size(); ++i) {
                const auto base = at_index("snippets", i);
                Snippet s = parse_snippet(items[i], base);
                if (!ids.insert(s.id).second) throw SchemaError(join(base, "id"), "duplicate");
                canonical.push_back(snippet_to_json(s));
                payload.snippets.push_back(std::move(s));
            }
            out.payload = std::move(payload);
            out.document = {{"snippets", std::move(canonical)}};
            break;
        }
    }
    return out;
}

GenerationResponse validate_raw_response(GenerationKind kind, std::string_view raw) {
    nlohmann::json doc = nlohmann::json::parse(strip_code_fence(raw), nullptr, false);
    if (doc.is_discarded()) throw SchemaError("$", "not valid JSON");
    return validate_response(kind, doc);
}

std::string_view strip_code_fence(std::string_view text) {
    auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return text;
    text.remove_prefix(first);
    if (!text.starts_with("```")) return text;
    auto nl = text.find('\n');
    if (nl == std::string_view::npos) return text;
    text.remove_prefix(nl + 1);
    auto close = text.rfind("```");
    if (close != std::string_view::npos) text = text.substr(0, close);
    return text;
}

std::string summarize_workspace(const Workspace& workspace, std::size_t budget) {
    struct Entry {
        std::string header;
        std::vector<std::string> lines;
        std::size_t kept = 0;
        std::size_t kept_bytes = 0;

        std::string marker() const {
            return "      ... [" + std::to_string(lines.size() - kept) + " of " +
                   std::to_string(lines.size()) + " lines elided]\n";
        }
        std::size_t size() const {
            return header.size() + kept_bytes + (kept < lines.size() ? marker().size() : 0);
        }
    };

    std::vector<Entry> entries;
    for (const auto& [path, content] : workspace.files()) {
        Entry e;
        auto lines = split_lines(content);
        e.header = "=== " + path + " (" + std::to_string(lines.size()) + " lines) ===\n";
        char num[16];
        for (std::size_t i = 0; i < lines.size(); ++i) {
            std::snprintf(num, sizeof num, "%5zu | ", i + 1);
            std::string line = num;
            line.append(lines[i]).push_back('\n');
            e.kept_bytes += line.size();
            e.lines.push_back(std::move(line));
        }
        e.kept = e.lines.size();
        entries.push_back(std::move(e));
    }

    auto total = [&] {
        std::size_t n = 0;
        for (const auto& e : entries) n += e.size();
        return n;
    };

    std::vector<Entry*> by_size;
    for (auto& e : entries) by_size.push_back(&e);
    std::stable_sort(by_size.begin(), by_size.end(),
                     [](const Entry* a, const Entry* b) { return a->size() > b->size(); });
    std::size_t current = total();
    for (Entry* e : by_size) {
        while (current > budget && e->kept > 0) {
            std::size_t before = e->size();
            --e->kept;
            e->kept_bytes -= e->lines[e->kept].size();
            current = current - before + e->size();
        }
        if (current <= budget) break;
    }

    std::string out;
    for (const auto& e : entries) {
        out += e.header;
        for (std::size_t i = 0; i < e.kept; ++i) out += e.lines[i];
        if (e.kept < e.lines.size()) out += e.marker();
    }
    return out;
}

std::string_view prompt_template(GenerationKind kind) {
    switch (kind) {
        case GenerationKind::Spec:
            return kSpecTemplate;
        case GenerationKind::Data:
            return kDataTemplate;
        case GenerationKind::Plan:
            return kPlanTemplate;
        case GenerationKind::Snippets:
            return kSnippetsTemplate;
        case GenerationKind::Redo:
            return kRedoTemplate;
    }
    return kSpecTemplate;
}

std::string_view system_prompt() { return kSystemTemplate; }

std::string render_prompt(const GenerationRequest& request) {
    const auto& c = request.context;
    std::string text(prompt_template(request.kind));
    replace_all(text, "{{goal}}", c.goal.value_or(""));
    replace_all(text, "{{specification}}", c.specification.value_or(""));
    replace_all(text, "{{plan}}", c.plan ? render_plan(*c.plan) : "");
    replace_all(text, "{{task}}", c.task ? c.task->title + "\n" + c.task->description : "");
    replace_all(text, "{{workspace}}", c.workspace_summary.value_or(""));
    std::string feedback;
    if (c.feedback) {
        feedback = request.kind == GenerationKind::Redo
                       ? *c.feedback
                       : "\nUser feedback on the previous draft:\n" + *c.feedback + "\n";
    }
    replace_all(text, "{{feedback}}", feedback);
    std::string failed;
    if (c.failed_snippets) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& s : *c.failed_snippets) arr.push_back(snippet_to_json(s));
        failed = arr.dump(2);
    }
    replace_all(text, "{{failed_snippets}}", failed);
    return text;
}

GenerationResponse Provider::generate(const GenerationRequest& request) {
    validate_request(request);
    std::vector<Attempt> attempts;
    for (std::size_t i = 0; i <= max_retries_; ++i) {
        std::string raw = fetch_raw(request, attempts);
        try {
            return validate_raw_response(request.kind, raw);
        } catch (const SchemaError& e) {
            attempts.push_back({std::move(raw), e.what()});
        }
    }
    fail(ErrorCode::SchemaInvalidAfterRetries,
         std::to_string(attempts.size()) + " attempts; last: " + attempts.back().diagnostic);
}

}  // namespace protoloop
