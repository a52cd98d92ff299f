// protoloop: headless driver for a prototyping session.

#include <CLI11.hpp>

#include <pthread.h>

#include <csignal>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "protoloop/error.hpp"
#include "protoloop/fsutil.hpp"
#include "protoloop/http_service.hpp"
#include "protoloop/project.hpp"
#include "protoloop/scripted_provider.hpp"

namespace fs = std::filesystem;
using namespace protoloop;

namespace {

void print(const nlohmann::json& doc) { std::cout << doc.dump(2) << "\n"; }

void print_plan(const Plan& plan) {
    for (const auto& t : plan.tasks()) {
        std::printf("%3llu. [%s] %s", static_cast<unsigned long long>(t.id.value),
                    std::string(to_string(t.status)).c_str(), t.title.c_str());
        if (t.snapshot_ref) std::printf("  (snapshot %llu)", static_cast<unsigned long long>(t.snapshot_ref->value));
        std::printf("\n");
    }
}

/// path=file pairs for manual overrides.
std::map<std::string, std::optional<std::string>> override_files(const std::vector<std::string>& sets,
                                                                 const std::vector<std::string>& deletes) {
    std::map<std::string, std::optional<std::string>> files;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) fail(ErrorCode::BadRequest, "--set expects PATH=FILE");
        files[s.substr(0, eq)] = read_file(s.substr(eq + 1));
    }
    for (const auto& d : deletes) files[d] = std::nullopt;
    if (files.empty()) fail(ErrorCode::BadRequest, "nothing to override; use --set or --delete");
    return files;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spiral prototyping loop: spec, plan, then one approved task at a time."};
    app.require_subcommand(1);

    std::string project_dir = ".";
    std::string provider_flag;
    app.add_option("-p,--project", project_dir, "Project directory")->envname("PROTOLOOP_PROJECT");
    app.add_option("--provider", provider_flag, "live | scripted:<fixture.json>");

    std::function<void()> action;
    auto open_project = [&] {
        std::optional<ProjectConfig> override;
        if (!provider_flag.empty()) override = ProjectConfig::from_provider_flag(provider_flag);
        return Project::open(project_dir, override);
    };
    auto run_op = [&](const std::string& verb, nlohmann::json payload) {
        auto project = open_project();
        auto result = project->execute(verb, payload);
        return std::make_pair(std::move(project), std::move(result));
    };

    // new
    auto* cmd_new = app.add_subcommand("new", "Create a project and draft its specification");
    std::string goal;
    std::string session_id;
    cmd_new->add_option("goal", goal, "What to prototype")->required();
    cmd_new->add_option("--session-id", session_id, "Fixed session id (default: random)");
    cmd_new->callback([&] {
        action = [&] {
            auto config = ProjectConfig::from_provider_flag(provider_flag.empty() ? "live" : provider_flag);
            std::unique_ptr<Project> project;
            if (Project::exists(project_dir)) {
                // a project that never got past drafting (failed or interrupted) can be restarted
                project = open_project();
                if (project->current()->stage != Stage::Drafting) {
                    fail(ErrorCode::ProjectExists, project_dir + " already holds a session");
                }
            } else {
                project = Project::create(project_dir, config);
            }
            nlohmann::json payload{{"goal", goal}};
            if (!session_id.empty()) payload["session_id"] = session_id;
            project->execute("start_session", payload);
            std::cout << project->current()->spec->specification << "\n";
        };
    });

    // spec
    auto* cmd_spec = app.add_subcommand("spec", "Review the specification");
    cmd_spec->require_subcommand(1);
    cmd_spec->add_subcommand("show", "Print the specification and dataset")->callback([&] {
        action = [&] {
            auto project = open_project();
            const auto& s = project->current()->spec;
            print(s ? spec_to_json(*s) : nlohmann::json(nullptr));
        };
    });
    cmd_spec->add_subcommand("approve", "Approve and generate the plan")->callback([&] {
        action = [&] {
            auto [project, _] = run_op("review_spec", {{"action", "approve"}});
            print_plan(project->current()->plan);
        };
    });
    std::string spec_feedback;
    auto* spec_regen = cmd_spec->add_subcommand("regen", "Regenerate with feedback");
    spec_regen->add_option("feedback", spec_feedback, "What to change");
    spec_regen->callback([&] {
        action = [&] {
            auto [project, _] = run_op("review_spec", {{"action", "regenerate"}, {"feedback", spec_feedback}});
            std::cout << project->current()->spec->specification << "\n";
        };
    });
    std::string spec_file;
    std::string records_file;
    auto* spec_edit = cmd_spec->add_subcommand("edit", "Replace the specification text");
    spec_edit->add_option("file", spec_file, "File with the new text")->required();
    spec_edit->add_option("--records", records_file, "JSON array replacing the dataset");
    spec_edit->callback([&] {
        action = [&] {
            nlohmann::json payload{{"action", "edit"}, {"specification", read_file(spec_file)}};
            if (!records_file.empty()) payload["records"] = nlohmann::json::parse(read_file(records_file));
            run_op("review_spec", payload);
        };
    });

    // plan
    auto* cmd_plan = app.add_subcommand("plan", "Review and edit the plan");
    cmd_plan->require_subcommand(1);
    cmd_plan->add_subcommand("show", "List tasks")->callback([&] {
        action = [&] { print_plan(open_project()->current()->plan); };
    });
    cmd_plan->add_subcommand("approve", "Approve the plan")->callback([&] {
        action = [&] { run_op("review_plan", {{"action", "approve"}}); };
    });
    std::string plan_feedback;
    auto* plan_regen = cmd_plan->add_subcommand("regen", "Regenerate the whole plan");
    plan_regen->add_option("feedback", plan_feedback, "What to change");
    plan_regen->callback([&] {
        action = [&] {
            auto [project, _] = run_op("review_plan", {{"action", "regenerate"}, {"feedback", plan_feedback}});
            print_plan(project->current()->plan);
        };
    });
    std::string task_title;
    std::string task_description;
    std::size_t task_position = 0;
    auto* plan_add = cmd_plan->add_subcommand("add", "Add a task");
    plan_add->add_option("title", task_title, "Task title")->required();
    plan_add->add_option("-d,--description", task_description, "Task description");
    plan_add->add_option("--position", task_position, "1-based position (default: append)");
    plan_add->callback([&] {
        action = [&] {
            nlohmann::json payload{{"title", task_title}, {"description", task_description}};
            if (task_position != 0) payload["position"] = task_position;
            auto [project, _] = run_op("add_task", payload);
            print_plan(project->current()->plan);
        };
    });
    std::uint64_t task_id = 0;
    auto* plan_remove = cmd_plan->add_subcommand("remove", "Remove a pending task");
    plan_remove->add_option("id", task_id, "Task id")->required();
    plan_remove->callback([&] {
        action = [&] { run_op("remove_task", {{"id", task_id}}); };
    });
    auto* plan_edit = cmd_plan->add_subcommand("edit", "Edit a pending task");
    plan_edit->add_option("id", task_id, "Task id")->required();
    plan_edit->add_option("title", task_title, "New title")->required();
    plan_edit->add_option("-d,--description", task_description, "New description");
    plan_edit->callback([&] {
        action = [&] {
            run_op("update_task", {{"id", task_id}, {"title", task_title}, {"description", task_description}});
        };
    });

    // task
    auto* cmd_task = app.add_subcommand("task", "Run and resolve tasks");
    cmd_task->require_subcommand(1);
    auto* task_run = cmd_task->add_subcommand("run", "Generate and inject the next task");
    task_run->add_option("id", task_id, "Task id (default: next pending)");
    task_run->callback([&] {
        action = [&] {
            auto project = open_project();
            std::uint64_t id = task_id;
            if (id == 0) {
                auto next = project->current()->plan.next_pending();
                if (!next) fail(ErrorCode::NotNextTask, "no pending task left");
                id = next->value;
            }
            project->execute("run_task", {{"id", id}});
            print(session_view(*project->current()).at("pending"));
        };
    });
    cmd_task->add_subcommand("approve", "Approve the injected batch")->callback([&] {
        action = [&] {
            auto [project, result] = run_op("resolve_task", {{"action", "approve"}});
            std::cout << "snapshot " << result.at("snapshot_id") << "\n";
        };
    });
    std::string redo_feedback;
    auto* task_redo = cmd_task->add_subcommand("redo", "Revert and regenerate with feedback");
    task_redo->add_option("feedback", redo_feedback, "What went wrong")->required();
    task_redo->callback([&] {
        action = [&] {
            auto [project, _] = run_op("resolve_task", {{"action", "redo"}, {"feedback", redo_feedback}});
            print(session_view(*project->current()).at("pending"));
        };
    });
    std::vector<std::string> override_sets;
    std::vector<std::string> override_deletes;
    auto* task_override = cmd_task->add_subcommand("override", "Replace files by hand, then approve");
    task_override->add_option("--set", override_sets, "PATH=FILE: workspace path and its new contents");
    task_override->add_option("--delete", override_deletes, "Workspace path to delete");
    task_override->callback([&] {
        action = [&] {
            nlohmann::json files = nlohmann::json::object();
            for (const auto& [path, content] : override_files(override_sets, override_deletes)) {
                files[path] = content ? nlohmann::json(*content) : nlohmann::json(nullptr);
            }
            auto [project, result] = run_op("resolve_task", {{"action", "manual_override"}, {"files", files}});
            std::cout << "snapshot " << result.at("snapshot_id") << "\n";
        };
    });

    // rollback
    std::uint64_t snapshot_id = 0;
    bool confirm = false;
    auto* cmd_rollback = app.add_subcommand("rollback", "Restore the workspace to a snapshot");
    cmd_rollback->add_option("snapshot", snapshot_id, "Snapshot id")->required();
    cmd_rollback->add_flag("--confirm", confirm, "Required: later work is discarded");
    cmd_rollback->callback([&] {
        action = [&] {
            auto [project, result] = run_op("rollback_to", {{"snapshot_id", snapshot_id}, {"confirm", confirm}});
            print(result);
        };
    });

    // read-only
    app.add_subcommand("status", "Print the session view")->callback([&] {
        action = [&] { print(session_view(*open_project()->current())); };
    });
    app.add_subcommand("snapshots", "List snapshots")->callback([&] {
        action = [&] { print(summaries_to_json(open_project()->current()->history.list())); };
    });

    std::string replay_fixture;
    auto* cmd_replay = app.add_subcommand("replay", "Re-run the log against the fixture and check every digest");
    cmd_replay->add_option("--fixture", replay_fixture, "Fixture (default: the project's)");
    cmd_replay->callback([&] {
        action = [&] {
            auto project = open_project();
            fs::path fixture = replay_fixture.empty() ? project->config().fixture : fs::path(replay_fixture);
            if (fixture.empty()) fail(ErrorCode::BadRequest, "project has no fixture; pass --fixture");
            auto log = Project::read_log(project_dir);
            auto session = replay(log, std::make_shared<ScriptedProvider>(ScriptedFixture::load(fixture)));
            std::cout << "replayed " << log.size() << " events, digest " << session.workspace.digest() << "\n";
        };
    });

    ServiceOptions serve_options;
    std::string ui_dir;
    auto* cmd_serve = app.add_subcommand("serve", "Serve the HTTP API and live preview");
    cmd_serve->add_option("--port", serve_options.port, "Port (0 picks one)");
    cmd_serve->add_option("--host", serve_options.host, "Bind address");
    cmd_serve->add_option("--ui-dir", ui_dir, "Built UI assets to serve at /");
    cmd_serve->callback([&] {
        action = [&] {
            if (!Project::exists(project_dir)) {
                Project::create(project_dir, ProjectConfig::from_provider_flag(
                                                 provider_flag.empty() ? "live" : provider_flag));
            }
            auto project = open_project();
            if (!ui_dir.empty()) serve_options.ui_dir = ui_dir;
            HttpService service(*project, serve_options);
            const int port = service.bind();
            std::cout << "listening on http://" << serve_options.host << ":" << port << "/" << std::endl;
            // SIGINT/SIGTERM are taken by a waiter thread rather than a
            // handler, so shutdown runs in ordinary thread context.
            sigset_t stop_signals;
            sigemptyset(&stop_signals);
            sigaddset(&stop_signals, SIGINT);
            sigaddset(&stop_signals, SIGTERM);
            pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
            std::thread waiter([&] {
                int sig = 0;
                sigwait(&stop_signals, &sig);
                service.stop();
            });
            service.run();
            pthread_kill(waiter.native_handle(), SIGTERM);
            waiter.join();
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        action();
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return e.code() == ErrorCode::Unconfirmed ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "IoError: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
