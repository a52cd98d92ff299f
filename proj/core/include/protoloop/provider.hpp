#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "protoloop/injection.hpp"
#include "protoloop/plan.hpp"
#include "protoloop/workspace.hpp"

namespace protoloop {

enum class GenerationKind { Spec, Data, Plan, Snippets, Redo };

std::string_view to_string(GenerationKind kind) noexcept;
std::optional<GenerationKind> generation_kind_from_string(std::string_view text) noexcept;

/// Inputs a generation may see. Which fields must be present depends on the
/// kind; see validate_request.
struct GenerationContext {
    std::optional<std::string> goal;
    std::optional<std::string> specification;
    std::optional<nlohmann::json> plan;
    std::optional<Task> task;
    std::optional<std::string> workspace_summary;
    std::optional<std::string> feedback;
    std::optional<std::vector<Snippet>> failed_snippets;
};

struct GenerationRequest {
    GenerationKind kind = GenerationKind::Spec;
    GenerationContext context;
};

/// Throws InvalidRequest unless the context carries exactly the fields the
/// kind requires (`feedback` is optional for Spec and Plan).
void validate_request(const GenerationRequest& request);

/// The text scripted fixtures match against: the goal for Spec/Data, the
/// specification for Plan, the task title for Snippets, the feedback for Redo.
std::string request_key(const GenerationRequest& request);

struct SpecPayload {
    std::string specification;
};
struct DataPayload {
    nlohmann::json records;
};
struct PlanPayload {
    std::vector<TaskDraft> tasks;
};
struct SnippetsPayload {
    std::vector<Snippet> snippets;
};

struct GenerationResponse {
    GenerationKind kind = GenerationKind::Spec;
    std::variant<SpecPayload, DataPayload, PlanPayload, SnippetsPayload> payload;
    nlohmann::json document;  // the validated wire document

    const std::string& specification() const { return std::get<SpecPayload>(payload).specification; }
    const nlohmann::json& records() const { return std::get<DataPayload>(payload).records; }
    const std::vector<TaskDraft>& tasks() const { return std::get<PlanPayload>(payload).tasks; }
    const std::vector<Snippet>& snippets() const {
        return std::get<SnippetsPayload>(payload).snippets;
    }
};

/// Schema gate for provider output. Throws SchemaError naming the first
/// violated location.
GenerationResponse validate_response(GenerationKind kind, const nlohmann::json& document);
GenerationResponse validate_raw_response(GenerationKind kind, std::string_view raw);

/// Strips a surrounding ``` fence if present.
std::string_view strip_code_fence(std::string_view text);

/// Line-numbered listing of every file, capped at `budget` bytes by
/// truncating the largest listings first.
std::string summarize_workspace(const Workspace& workspace, std::size_t budget = 64 * 1024);

inline constexpr std::string_view kPromptTemplateVersion = "1";

std::string_view prompt_template(GenerationKind kind);
std::string_view system_prompt();

/// Pure function of the request.
std::string render_prompt(const GenerationRequest& request);

struct Attempt {
    std::string raw;
    std::string diagnostic;
};

/// A generation backend. generate() validates the request, fetches a raw
/// document, and re-fetches up to max_retries() times while the document
/// fails the schema gate, handing the earlier attempts back to fetch_raw.
class Provider {
public:
    virtual ~Provider() = default;

    virtual GenerationResponse generate(const GenerationRequest& request);

    /// Abandon the in-flight generation (if any). Thread-safe.
    virtual void cancel() {}

    /// Opaque resumable state (e.g. a fixture cursor); null when stateless.
    virtual nlohmann::json checkpoint() const { return nullptr; }
    virtual void restore(const nlohmann::json& /*state*/) {}

    virtual std::string describe() const = 0;

    std::size_t max_retries() const noexcept { return max_retries_; }
    void set_max_retries(std::size_t n) noexcept { max_retries_ = n; }

protected:
    virtual std::string fetch_raw(const GenerationRequest& request,
                                  std::span<const Attempt> previous) = 0;

private:
    std::size_t max_retries_ = 2;
};

}  // namespace protoloop
