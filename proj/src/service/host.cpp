#include "apprentice/service/host.hpp"

#include <condition_variable>
#include <ctime>
#include <deque>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "apprentice/dialog/transcript.hpp"
#include "apprentice/lm/mock_backend.hpp"
#include "apprentice/lm/remote_backend.hpp"

namespace apprentice::service {

namespace fs = std::filesystem;
using dialog::DialogSession;
using dialog::Input;

namespace {

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file_atomic(const fs::path& p, const std::string& text) {
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << text;
    }
    fs::rename(tmp, p);
}

bool flag_value(const ojson& v, const char* field) {
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "on" || s == "true") return true;
        if (s == "off" || s == "false") return false;
    }
    throw BadConfig(std::string(field) + " must be a boolean or on/off");
}

int int_field(const ojson& j, const char* field, int fallback) {
    if (!j.contains(field)) return fallback;
    if (!j[field].is_number_integer()) throw BadConfig(std::string(field) + " must be an integer");
    return j[field].get<int>();
}

// Session ids are s1, s2, ...; anything else maps to 0.
long id_number(const std::string& id) {
    if (id.size() < 2 || id[0] != 's') return 0;
    try {
        return std::stol(id.substr(1));
    } catch (const std::exception&) {
        return 0;
    }
}

ojson view_of(const std::string& id, const DialogSession& s) {
    ojson j;
    j["id"] = id;
    j["seq"] = s.last_seq();
    j["mode"] = std::string(dialog::mode_name(s.mode()));
    j["busy"] = false;
    const auto pending = s.pending_confirmation();
    j["pending"] = pending ? dialog::to_json(*pending) : ojson();
    const auto& stack = s.state().definition_stack;
    if (stack.empty()) {
        j["definition"] = nullptr;
    } else {
        j["definition"] = {{"segment", stack.back().source_segment},
                           {"name", stack.back().name},
                           {"depth", stack.size()}};
    }
    j["command"] = s.state().command ? ojson(s.state().command->utterance) : ojson();
    j["knowledge"] = ojson::array();
    for (const auto& e : dialog::knowledge_display(s.kb())) j["knowledge"].push_back(dialog::to_json(e));
    j["world"] = {{"grid", render(s.world())}, {"state", world_to_json(s.world())}};
    j["undo_depth"] = s.snapshot_depth();
    j["backend"] = s.backend_kind();
    j["confirmations"] = s.config().confirmations;
    return j;
}

}  // namespace

BackendFactory default_backend_factory() {
    return [](const std::string& kind) -> std::shared_ptr<lm::LmBackend> {
        if (kind == "mock") return std::make_shared<lm::MockBackend>();
        if (kind == "remote") return std::make_shared<lm::RemoteBackend>(lm::RemoteConfig::from_env());
        throw std::runtime_error("unknown backend kind: " + kind);
    };
}

CreateRequest CreateRequest::from_json(const ojson& j) {
    if (j.is_null()) return {};
    if (!j.is_object()) throw BadConfig("session config must be a JSON object");
    CreateRequest r;
    if (j.contains("backend")) {
        if (!j["backend"].is_string()) throw BadConfig("backend must be a string");
        r.backend = j["backend"].get<std::string>();
        if (r.backend != "mock" && r.backend != "remote") throw BadConfig("backend must be mock or remote");
    }
    if (j.contains("layout") && !j["layout"].is_null()) {
        const fs::path path = j["layout"].get<std::string>();
        if (!fs::is_regular_file(path)) throw BadConfig("layout file not found: " + path.string());
        r.config.layout_text = read_file(path);
    }
    if (j.contains("layout_text")) r.config.layout_text = j["layout_text"].get<std::string>();
    if (j.contains("confirmations")) r.config.confirmations = flag_value(j["confirmations"], "confirmations");
    r.config.max_scolds = int_field(j, "max_scolds", r.config.max_scolds);
    r.config.max_depth = int_field(j, "max_depth", r.config.max_depth);
    if (r.config.max_scolds < 0) throw BadConfig("max_scolds must not be negative");
    if (r.config.max_depth < 1) throw BadConfig("max_depth must be at least 1");
    if (j.contains("kitchen")) {
        const auto& k = j["kitchen"];
        r.config.kitchen.pot_capacity = int_field(k, "pot_capacity", r.config.kitchen.pot_capacity);
        r.config.kitchen.cook_ticks = int_field(k, "cook_ticks", r.config.kitchen.cook_ticks);
        if (r.config.kitchen.pot_capacity < 1) throw BadConfig("pot_capacity must be at least 1");
        if (r.config.kitchen.cook_ticks < 0) throw BadConfig("cook_ticks must not be negative");
    }
    if (!r.config.layout_text.empty()) {
        try {
            parse_layout(r.config.layout_text);
        } catch (const std::exception& e) {
            throw BadConfig(std::string("bad layout: ") + e.what());
        }
    }
    return r;
}

ojson SessionRecord::to_json() const {
    return {{"id", id},           {"created_at", created_at}, {"backend", backend},
            {"confirmations", confirmations}, {"transcript", transcript}, {"kb", kb},
            {"metrics", metrics}};
}

SessionRecord SessionRecord::from_json(const ojson& j) {
    SessionRecord r;
    r.id = j.at("id").get<std::string>();
    r.created_at = j.value("created_at", std::string{});
    r.backend = j.value("backend", std::string("mock"));
    r.confirmations = j.value("confirmations", true);
    r.transcript = j.at("transcript").get<std::string>();
    r.kb = j.value("kb", ojson());
    r.metrics = j.value("metrics", ojson());
    return r;
}

struct SessionHost::Slot {
    std::string id;
    std::string created_at;
    std::string backend;
    std::unique_ptr<DialogSession> session;

    mutable std::mutex m;
    mutable std::condition_variable changed;  // new events, idle, stop
    std::condition_variable work_ready;
    std::deque<Input> queue;
    bool running = false;
    bool stop = false;

    std::string header_line;
    std::vector<std::string> lines;
    ojson view;
    std::ofstream transcript_out;
    fs::path transcript_path;
    fs::path record_path;

    std::thread worker;

    bool busy() const { return running || !queue.empty(); }
};

SessionHost::SessionHost(Options options) : options_(std::move(options)) {
    if (!options_.backends) options_.backends = default_backend_factory();
    if (!options_.data_dir.empty()) {
        fs::create_directories(options_.data_dir);
        restore();
    }
}

SessionHost::~SessionHost() {
    shutdown();
    std::map<std::string, std::shared_ptr<Slot>> slots;
    {
        std::lock_guard lock(mutex_);
        slots.swap(slots_);
    }
    for (auto& [id, slot] : slots) {
        if (slot->worker.joinable()) slot->worker.join();
    }
}

void SessionHost::shutdown() {
    std::vector<std::shared_ptr<Slot>> slots;
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
        for (auto& [id, slot] : slots_) slots.push_back(slot);
    }
    for (auto& slot : slots) {
        {
            std::lock_guard lock(slot->m);
            slot->stop = true;
        }
        slot->work_ready.notify_all();
        slot->changed.notify_all();
    }
}

bool SessionHost::shutting_down() const {
    std::lock_guard lock(mutex_);
    return stopping_;
}

std::string SessionHost::next_id() {
    return "s" + std::to_string(next_number_++);
}

std::shared_ptr<SessionHost::Slot> SessionHost::find(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = slots_.find(id);
    if (it == slots_.end()) throw UnknownSession(id);
    return it->second;
}

std::shared_ptr<SessionHost::Slot> SessionHost::start_slot(std::string id, std::string created_at,
                                                           std::string backend,
                                                           std::unique_ptr<DialogSession> session) {
    auto slot = std::make_shared<Slot>();
    slot->id = std::move(id);
    slot->created_at = std::move(created_at);
    slot->backend = std::move(backend);
    slot->session = std::move(session);
    slot->header_line = dialog::header_json(slot->session->config(), slot->session->backend_kind()).dump();
    for (const auto& e : slot->session->events()) slot->lines.push_back(dialog::to_json(e).dump());
    slot->view = view_of(slot->id, *slot->session);

    if (!options_.data_dir.empty()) {
        slot->transcript_path = options_.data_dir / (slot->id + ".jsonl");
        slot->record_path = options_.data_dir / (slot->id + ".record.json");
        // Rewritten whole: a rebuilt session may have completed an input the
        // previous process was cut off in.
        slot->transcript_out.open(slot->transcript_path, std::ios::binary | std::ios::trunc);
        if (!slot->transcript_out) throw ServiceError("cannot write " + slot->transcript_path.string());
        slot->transcript_out << slot->header_line << '\n';
        for (const auto& line : slot->lines) slot->transcript_out << line << '\n';
        slot->transcript_out.flush();
        persist_record(*slot);
    }

    Slot* raw = slot.get();
    slot->session->set_listener([raw](const dialog::Event& e) {
        std::string line = dialog::to_json(e).dump();
        {
            std::lock_guard lock(raw->m);
            if (raw->transcript_out.is_open()) {
                raw->transcript_out << line << '\n';
                raw->transcript_out.flush();
            }
            raw->lines.push_back(std::move(line));
            raw->view = view_of(raw->id, *raw->session);
        }
        raw->changed.notify_all();
    });
    slot->worker = std::thread([this, raw] { work(*raw); });
    return slot;
}

void SessionHost::restore() {
    std::vector<fs::path> records;
    for (const auto& entry : fs::directory_iterator(options_.data_dir)) {
        const auto name = entry.path().filename().string();
        if (name.size() > 12 && name.ends_with(".record.json")) records.push_back(entry.path());
    }
    std::sort(records.begin(), records.end());
    for (const auto& path : records) {
        try {
            const auto rec = SessionRecord::from_json(ojson::parse(read_file(path)));
            const auto transcript = dialog::load_transcript((options_.data_dir / rec.transcript).string());
            std::shared_ptr<lm::LmBackend> live;
            try {
                live = options_.backends(transcript.backend_kind);
            } catch (const std::exception& e) {
                std::cerr << "session " << rec.id << ": no live backend (" << e.what()
                          << "); only logged responses are available\n";
            }
            auto session = dialog::rebuild(transcript, live);
            const auto& events = session->events();
            for (std::size_t i = 0; i < transcript.event_lines.size(); ++i) {
                if (i >= events.size() || dialog::to_json(events[i]).dump() != transcript.event_lines[i]) {
                    std::cerr << "session " << rec.id << ": replay diverges from the transcript at event "
                              << i << "\n";
                    break;
                }
            }
            next_number_ = std::max(next_number_, id_number(rec.id) + 1);
            auto slot = start_slot(rec.id, rec.created_at, rec.backend, std::move(session));
            std::lock_guard lock(mutex_);
            slots_[rec.id] = slot;
        } catch (const std::exception& e) {
            std::cerr << "skipping " << path.string() << ": " << e.what() << "\n";
        }
    }
}

std::string SessionHost::create_session(const CreateRequest& request) {
    std::shared_ptr<lm::LmBackend> backend;
    try {
        backend = options_.backends(request.backend);
    } catch (const std::exception& e) {
        throw BadConfig(std::string("backend unavailable: ") + e.what());
    }
    std::unique_ptr<DialogSession> session;
    try {
        session = std::make_unique<DialogSession>(request.config, std::move(backend));
    } catch (const std::exception& e) {
        throw BadConfig(e.what());
    }
    std::string id;
    {
        std::lock_guard lock(mutex_);
        if (stopping_) throw ServiceError("the host is shutting down");
        id = next_id();
    }
    auto slot = start_slot(id, utc_now(), request.backend, std::move(session));
    std::lock_guard lock(mutex_);
    slots_[id] = slot;
    return id;
}

void SessionHost::enqueue(Slot& slot, Input input) {
    slot.queue.push_back(std::move(input));
    slot.work_ready.notify_one();
}

long SessionHost::post_message(const std::string& id, const std::string& text) {
    auto slot = find(id);
    std::lock_guard lock(slot->m);
    if (slot->stop) throw ServiceError("the host is shutting down");
    if (slot->busy()) throw Busy();
    if (!slot->session->accepts(Input::Kind::Say)) {
        throw WrongMode("a confirmation is pending; approve or correct it first");
    }
    const long seq = slot->session->last_seq();
    enqueue(*slot, Input::say(text));
    return seq;
}

long SessionHost::post_confirmation(const std::string& id, bool approve, const ojson& correction) {
    auto slot = find(id);
    std::lock_guard lock(slot->m);
    if (slot->stop) throw ServiceError("the host is shutting down");
    if (slot->busy()) throw Busy();
    if (!slot->session->accepts(Input::Kind::Confirm)) throw WrongMode("there is nothing to confirm");
    const long seq = slot->session->last_seq();
    enqueue(*slot, approve ? Input::approval() : Input::correct(correction));
    return seq;
}

long SessionHost::post_undo(const std::string& id) {
    auto slot = find(id);
    std::lock_guard lock(slot->m);
    if (slot->stop) throw ServiceError("the host is shutting down");
    const long seq = slot->lines.size();
    if (slot->busy()) {
        slot->session->request_cancel();
    } else {
        enqueue(*slot, Input::undo());
    }
    return seq;
}

void SessionHost::work(Slot& slot) {
    for (;;) {
        Input input;
        {
            std::unique_lock lock(slot.m);
            slot.work_ready.wait(lock, [&] { return slot.stop || !slot.queue.empty(); });
            if (slot.stop) return;
            input = std::move(slot.queue.front());
            slot.queue.pop_front();
            slot.running = true;
        }
        auto outcome = slot.session->handle(input);
        for (;;) {
            std::unique_lock lock(slot.m);
            // An undo that arrived too late to interrupt the input undoes it.
            if (!outcome.cancelled && slot.session->cancel_pending() && !slot.stop) {
                lock.unlock();
                slot.session->clear_cancel();
                outcome = slot.session->handle(Input::undo());
                continue;
            }
            slot.session->clear_cancel();
            break;
        }
        if (!slot.transcript_path.empty()) {
            try {
                persist_record(slot);
            } catch (const std::exception& e) {
                std::cerr << "session " << slot.id << ": " << e.what() << "\n";
            }
        }
        {
            std::lock_guard lock(slot.m);
            slot.running = false;
        }
        slot.changed.notify_all();
    }
}

void SessionHost::persist_record(Slot& slot) {
    SessionRecord rec;
    rec.id = slot.id;
    rec.created_at = slot.created_at;
    rec.backend = slot.backend;
    rec.confirmations = slot.session->config().confirmations;
    rec.transcript = slot.transcript_path.filename().string();
    rec.kb = serialize_kb(slot.session->kb());
    rec.metrics = dialog::to_json(slot.session->metrics());
    write_file_atomic(slot.record_path, rec.to_json().dump(2) + "\n");
}

ojson SessionHost::get_state(const std::string& id) const {
    auto slot = find(id);
    std::lock_guard lock(slot->m);
    ojson view = slot->view;
    view["busy"] = slot->busy();
    return view;
}

ojson SessionHost::export_metrics(const std::string& id) const {
    auto slot = find(id);
    wait_idle(id);
    std::lock_guard lock(slot->m);
    return dialog::to_json(slot->session->metrics());
}

SessionRecord SessionHost::record(const std::string& id) const {
    auto slot = find(id);
    wait_idle(id);
    std::lock_guard lock(slot->m);
    SessionRecord rec;
    rec.id = slot->id;
    rec.created_at = slot->created_at;
    rec.backend = slot->backend;
    rec.confirmations = slot->session->config().confirmations;
    rec.transcript = slot->transcript_path.filename().string();
    rec.kb = serialize_kb(slot->session->kb());
    rec.metrics = dialog::to_json(slot->session->metrics());
    return rec;
}

std::vector<std::string> SessionHost::session_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::pair<long, std::string>> ids;
    for (const auto& [id, slot] : slots_) ids.emplace_back(id_number(id), id);
    std::sort(ids.begin(), ids.end());
    std::vector<std::string> out;
    for (auto& [n, id] : ids) out.push_back(id);
    return out;
}

std::vector<std::string> SessionHost::events_since(const std::string& id, long since) const {
    auto slot = find(id);
    std::lock_guard lock(slot->m);
    const std::size_t from = since < 0 ? 0 : static_cast<std::size_t>(since);
    if (from >= slot->lines.size()) return {};
    return {slot->lines.begin() + static_cast<long>(from), slot->lines.end()};
}

bool SessionHost::wait_for_events(const std::string& id, long since, std::chrono::milliseconds timeout) const {
    auto slot = find(id);
    std::unique_lock lock(slot->m);
    slot->changed.wait_for(lock, timeout, [&] {
        return slot->stop || static_cast<long>(slot->lines.size()) > since;
    });
    return static_cast<long>(slot->lines.size()) > since;
}

bool SessionHost::wait_idle(const std::string& id, std::chrono::milliseconds timeout) const {
    auto slot = find(id);
    std::unique_lock lock(slot->m);
    return slot->changed.wait_for(lock, timeout, [&] { return slot->stop || !slot->busy(); });
}

std::string SessionHost::transcript(const std::string& id) const {
    auto slot = find(id);
    std::lock_guard lock(slot->m);
    std::string out = slot->header_line + "\n";
    for (const auto& line : slot->lines) out += line + "\n";
    return out;
}

}  // namespace apprentice::service
