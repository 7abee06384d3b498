// Python extension: dialog sessions, scripts and replay. Structured values
// cross the boundary as JSON text; the Python package decodes them.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "apprentice/dialog/script.hpp"
#include "apprentice/dialog/transcript.hpp"
#include "apprentice/environment.hpp"
#include "apprentice/resources.hpp"
#include "apprentice/service/host.hpp"

namespace py = pybind11;
using namespace apprentice;

namespace {

class PySession {
public:
    PySession(const std::string& config_json, const std::string& backend) {
        auto request = service::CreateRequest::from_json(
            config_json.empty() ? dialog::ojson() : dialog::ojson::parse(config_json));
        if (!backend.empty()) request.backend = backend;
        session_ = std::make_unique<dialog::DialogSession>(
            request.config, service::default_backend_factory()(request.backend));
    }

    // Each input returns the events it produced, as JSON lines.
    std::vector<std::string> say(const std::string& text) { return run(dialog::Input::say(text)); }
    std::vector<std::string> approve() { return run(dialog::Input::approval()); }
    std::vector<std::string> correct(const std::string& value_json) {
        return run(dialog::Input::correct(dialog::ojson::parse(value_json)));
    }
    std::vector<std::string> undo() { return run(dialog::Input::undo()); }

    std::string mode() const { return std::string(dialog::mode_name(session_->mode())); }
    std::string state() const { return dialog::state_to_json(session_->state()).dump(); }
    std::string metrics() const { return dialog::to_json(session_->metrics()).dump(); }
    std::string transcript() const { return dialog::transcript_text(*session_); }
    std::vector<std::string> world() const { return render(session_->world()); }

    std::string pending() const {
        auto p = session_->pending_confirmation();
        return p ? dialog::to_json(*p).dump() : "null";
    }

    std::string knowledge() const {
        dialog::ojson out = dialog::ojson::array();
        for (const auto& e : dialog::knowledge_display(session_->kb())) out.push_back(dialog::to_json(e));
        return out.dump();
    }

    std::vector<std::string> events() const {
        std::vector<std::string> out;
        for (const auto& e : session_->events()) out.push_back(dialog::to_json(e).dump());
        return out;
    }

private:
    std::vector<std::string> run(const dialog::Input& input) {
        const std::size_t before = session_->events().size();
        {
            py::gil_scoped_release release;
            session_->handle(input);
        }
        std::vector<std::string> out;
        const auto& events = session_->events();
        for (std::size_t i = before; i < events.size(); ++i) out.push_back(dialog::to_json(events[i]).dump());
        return out;
    }

    std::unique_ptr<dialog::DialogSession> session_;
};

std::string run_script(const std::string& script_text, const std::string& config_json) {
    const auto request = service::CreateRequest::from_json(
        config_json.empty() ? dialog::ojson() : dialog::ojson::parse(config_json));
    const auto script = dialog::parse_script(script_text);
    dialog::DialogSession session(request.config, service::default_backend_factory()(request.backend));
    const auto r = dialog::run_script(session, script);
    dialog::ojson out;
    out["ok"] = r.ok;
    out["failure"] = r.failure;
    out["line"] = r.line;
    out["event_index"] = r.event_index;
    out["metrics"] = dialog::to_json(session.metrics());
    out["transcript"] = dialog::transcript_text(session);
    return out.dump();
}

std::string replay(const std::string& transcript_text) {
    std::istringstream in(transcript_text);
    const auto t = dialog::read_transcript(in);
    const auto r = dialog::replay(t);
    dialog::ojson out;
    out["ok"] = r.ok();
    out["events_equal"] = r.events_equal;
    out["first_mismatch"] = r.first_mismatch ? dialog::ojson(*r.first_mismatch) : dialog::ojson();
    out["final_state_equal"] = r.final_state_equal;
    out["summary"] = r.summary();
    return out.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Interactive task learning engine";

    py::register_exception<service::BadConfig>(m, "BadConfig", PyExc_ValueError);
    py::register_exception<dialog::ScriptError>(m, "ScriptError", PyExc_ValueError);
    py::register_exception<dialog::TranscriptError>(m, "TranscriptError", PyExc_ValueError);

    py::class_<PySession>(m, "Session")
        .def(py::init<const std::string&, const std::string&>(), py::arg("config_json") = "",
             py::arg("backend") = "")
        .def("say", &PySession::say)
        .def("approve", &PySession::approve)
        .def("correct", &PySession::correct)
        .def("undo", &PySession::undo)
        .def("mode", &PySession::mode)
        .def("state", &PySession::state)
        .def("metrics", &PySession::metrics)
        .def("transcript", &PySession::transcript)
        .def("world", &PySession::world)
        .def("pending", &PySession::pending)
        .def("knowledge", &PySession::knowledge)
        .def("events", &PySession::events);

    m.def("run_script", &run_script, py::arg("script"), py::arg("config_json") = "");
    m.def("replay", &replay, py::arg("transcript"));
    m.def("bundled_script", [] { return std::string(resources::onion_soup_script()); });
}
