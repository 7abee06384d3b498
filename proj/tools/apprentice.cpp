// Command-line driver: run teaching scripts, verify transcripts, serve HTTP.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "apprentice/dialog/script.hpp"
#include "apprentice/dialog/transcript.hpp"
#include "apprentice/service/host.hpp"
#include "apprentice/service/http_server.hpp"

using namespace apprentice;

namespace {

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

// One readable line per dialog event; exchanges are left out.
std::string describe(const dialog::Event& e) {
    const auto j = dialog::to_json(e);
    const std::string type = j["type"];
    if (type == "user_message") {
        if (j["input"] == "say") return "user:  " + j["text"].get<std::string>();
        if (j["input"] == "undo") return "user:  [undo]";
        if (j["verdict"] == "approve") return "user:  [approve]";
        return "user:  [correct] " + j["correction"].dump();
    }
    if (type == "agent_message") return "agent: " + j["text"].get<std::string>();
    if (type == "confirmation_issued") return "agent: " + j["request"]["question"].get<std::string>();
    if (type == "action_dispatched") {
        return "  do   " + j["action"].get<std::string>() + j["args"].dump() + " @" + j["tick"].dump();
    }
    if (type == "milestone") return "  ** " + j["name"].get<std::string>();
    if (type == "action_learned") return "  learned " + j["name"].get<std::string>();
    if (type == "error") return "  error " + j["code"].get<std::string>() + ": " + j["message"].get<std::string>();
    if (type == "undo_applied") return j["applied"].get<bool>() ? "  undone" : "  nothing to undo";
    return "";
}

struct TeachOptions {
    std::string script;
    std::string backend = "mock";
    std::string confirmations = "on";
    std::string layout;
    std::string metrics_out;
    std::string transcript_out;
    int max_scolds = 2;
    bool show_dialog = false;
};

int teach(const TeachOptions& o) {
    dialog::SessionConfig config;
    config.confirmations = o.confirmations == "on";
    config.max_scolds = o.max_scolds;
    if (!o.layout.empty()) config.layout_text = read_text(o.layout);

    std::vector<dialog::Directive> script;
    try {
        script = dialog::load_script(o.script);
    } catch (const dialog::ScriptError& e) {
        std::cerr << o.script << ": " << e.what() << "\n";
        return 2;
    }

    std::shared_ptr<lm::LmBackend> backend;
    try {
        backend = service::default_backend_factory()(o.backend);
    } catch (const std::exception& e) {
        std::cerr << "backend " << o.backend << " unavailable: " << e.what() << "\n";
        return 2;
    }
    dialog::DialogSession session(config, backend);
    if (o.show_dialog) {
        session.set_listener([](const dialog::Event& e) {
            if (auto line = describe(e); !line.empty()) std::cerr << line << "\n";
        });
    }
    const auto result = dialog::run_script(session, script);

    const auto metrics = dialog::to_json(session.metrics()).dump(2);
    if (!o.metrics_out.empty()) write_text(o.metrics_out, metrics + "\n");
    if (!o.transcript_out.empty()) write_text(o.transcript_out, dialog::transcript_text(session));
    std::cout << metrics << "\n";

    if (!result.ok) {
        std::cerr << "FAILED at line " << result.line << " (event " << result.event_index
                  << "): " << result.failure << "\n";
        return 1;
    }
    std::cerr << "ok: " << result.directives_run << " directives, " << session.last_seq() << " events\n";
    return 0;
}

int replay(const std::string& path) {
    dialog::Transcript t;
    try {
        t = dialog::load_transcript(path);
    } catch (const std::exception& e) {
        std::cerr << "corrupt transcript: " << e.what() << "\n";
        return 2;
    }
    const auto report = dialog::replay(t);
    std::cout << report.summary() << "\n";
    return report.ok() ? 0 : 1;
}

int serve(const std::string& address, int port, const std::string& data_dir) {
    // Signals are taken synchronously below; block them before any thread starts.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    service::SessionHost::Options options;
    options.data_dir = data_dir;
    service::SessionHost host(options);
    service::HttpServer server(host);
    const int bound = server.start(address, port);
    if (bound < 0) {
        std::cerr << "cannot listen on " << address << ":" << port << "\n";
        return 2;
    }
    std::cerr << "listening on http://" << address << ":" << bound;
    if (!data_dir.empty()) std::cerr << " (data in " << data_dir << ", " << host.session_ids().size() << " sessions restored)";
    std::cerr << std::endl;

    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << "shutting down\n";
    host.shutdown();
    server.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Teach a kitchen agent new tasks through dialog."};
    app.require_subcommand(1);

    TeachOptions teach_opts;
    auto* teach_cmd = app.add_subcommand("teach", "Run a teaching script against an in-process session");
    teach_cmd->add_option("--script", teach_opts.script, "Script file")->required()->check(CLI::ExistingFile);
    teach_cmd->add_option("--backend", teach_opts.backend, "Language model backend")
        ->check(CLI::IsMember({"mock", "remote"}));
    teach_cmd->add_option("--confirmations", teach_opts.confirmations, "Ask the user to confirm each step")
        ->check(CLI::IsMember({"on", "off"}));
    teach_cmd->add_option("--layout", teach_opts.layout, "Kitchen layout file")->check(CLI::ExistingFile);
    teach_cmd->add_option("--metrics-out", teach_opts.metrics_out, "Write the metrics summary here");
    teach_cmd->add_option("--transcript-out", teach_opts.transcript_out, "Write the transcript here");
    teach_cmd->add_option("--max-scolds", teach_opts.max_scolds, "Retries after a refusal")
        ->check(CLI::NonNegativeNumber);
    teach_cmd->add_flag("--show-dialog", teach_opts.show_dialog, "Print the conversation to stderr");

    std::string transcript;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run a transcript offline and compare");
    replay_cmd->add_option("--transcript", transcript, "Transcript file")->required()->check(CLI::ExistingFile);

    std::string address = "127.0.0.1";
    int port = 8080;
    std::string data_dir;
    auto* serve_cmd = app.add_subcommand("serve", "Serve sessions over HTTP");
    serve_cmd->add_option("--port", port, "TCP port (0 picks one)")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--host", address, "Address to bind");
    serve_cmd->add_option("--data-dir", data_dir, "Persist sessions here and restore them on start");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*teach_cmd) return teach(teach_opts);
        if (*replay_cmd) return replay(transcript);
        if (*serve_cmd) return serve(address, port, data_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
