#include "attnpipe/session_io.hpp"

#include "attnpipe/errors.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace attnpipe {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 7> kKindNames{"audio",    "emotion", "identity", "landmarks",
                                                     "observed", "pose",    "pupils"};

bool blank(std::string_view line) {
    return line.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

json parse_object(std::string_view line, std::size_t line_no) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(line_no, std::string("invalid JSON (") + e.what() + ")");
    }
    if (!obj.is_object()) throw ParseError(line_no, "expected a JSON object");
    return obj;
}

const json& field(const json& obj, const char* key, std::size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(line_no, std::string("missing field '") + key + "'");
    return *it;
}

double finite_number(const json& v, const char* what, std::size_t line_no) {
    if (!v.is_number()) throw ParseError(line_no, std::string(what) + " must be a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) throw ParseError(line_no, std::string(what) + " must be finite");
    return d;
}

Point2D point(const json& v, const char* what, std::size_t line_no) {
    if (!v.is_array() || v.size() != 2) throw ParseError(line_no, std::string(what) + " must be [x,y]");
    return {finite_number(v[0], what, line_no), finite_number(v[1], what, line_no)};
}

std::optional<Point2D> optional_point(const json& obj, const char* key, std::size_t line_no) {
    const json& v = field(obj, key, line_no);
    if (v.is_null()) return std::nullopt;
    return point(v, key, line_no);
}

ordered_json point_json(Point2D p) {
    return ordered_json::array({p.x, p.y});
}

} // namespace

std::string_view kind_name(RecordKind k) noexcept {
    return kKindNames[static_cast<std::size_t>(k)];
}

std::optional<RecordKind> kind_from_name(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kKindNames.size(); ++i)
        if (kKindNames[i] == name) return static_cast<RecordKind>(i);
    return std::nullopt;
}

SessionMeta parse_header_line(std::string_view line, std::size_t line_no) {
    json obj = parse_object(line, line_no);
    const json& format = field(obj, "format", line_no);
    if (!format.is_string() || format.get<std::string>() != kSessionFormat)
        throw ParseError(line_no, "header format must be \"" + std::string(kSessionFormat) + "\"");
    const json& subject = field(obj, "subject", line_no);
    if (!subject.is_string()) throw ParseError(line_no, "header subject must be a string");
    double duration = finite_number(field(obj, "duration_s", line_no), "duration_s", line_no);
    if (duration < 0.0) throw ParseError(line_no, "duration_s must be >= 0");
    return {subject.get<std::string>(), duration};
}

FeatureRecord parse_record_line(std::string_view line, std::size_t line_no) {
    json obj = parse_object(line, line_no);
    FeatureRecord rec;
    rec.t = finite_number(field(obj, "t", line_no), "t", line_no);
    if (rec.t < 0.0) throw ParseError(line_no, "t must be >= 0");

    const json& kind_v = field(obj, "kind", line_no);
    if (!kind_v.is_string()) throw ParseError(line_no, "kind must be a string");
    auto kind = kind_from_name(kind_v.get_ref<const std::string&>());
    if (!kind) throw ParseError(line_no, "unknown kind '" + kind_v.get<std::string>() + "'");

    switch (*kind) {
    case RecordKind::Audio:
        rec.payload = AudioPayload{finite_number(field(obj, "db", line_no), "db", line_no)};
        break;
    case RecordKind::Emotion: {
        const json& label = field(obj, "label", line_no);
        if (!label.is_string()) throw ParseError(line_no, "label must be a string");
        auto e = emotion_from_name(label.get_ref<const std::string&>());
        if (!e) throw ParseError(line_no, "unknown emotion label '" + label.get<std::string>() + "'");
        rec.payload = EmotionPayload{*e};
        break;
    }
    case RecordKind::Identity: {
        const json& subject = field(obj, "subject", line_no);
        const json& verified = field(obj, "verified", line_no);
        if (!subject.is_string()) throw ParseError(line_no, "subject must be a string");
        if (!verified.is_boolean()) throw ParseError(line_no, "verified must be true or false");
        rec.payload = IdentityPayload{subject.get<std::string>(), verified.get<bool>()};
        break;
    }
    case RecordKind::Landmarks: {
        const json& pts = field(obj, "pts", line_no);
        if (!pts.is_array() || pts.size() != kLandmarkCount)
            throw ParseError(line_no, "landmarks need exactly 68 points, got " +
                                          std::to_string(pts.is_array() ? pts.size() : 0));
        LandmarksPayload lm;
        for (std::size_t i = 0; i < kLandmarkCount; ++i) lm.pts[i] = point(pts[i], "landmark", line_no);
        rec.payload = lm;
        break;
    }
    case RecordKind::Observed: {
        double att = finite_number(field(obj, "att", line_no), "att", line_no);
        if (att < 0.0 || att > 100.0) throw ParseError(line_no, "att must lie in [0,100]");
        rec.payload = ObservedPayload{att};
        break;
    }
    case RecordKind::Pose: {
        const json& kp = field(obj, "kp", line_no);
        if (!kp.is_array() || kp.size() != kPoseKeypointCount)
            throw ParseError(line_no, "pose needs exactly 17 keypoints, got " +
                                          std::to_string(kp.is_array() ? kp.size() : 0));
        PosePayload pose;
        for (std::size_t i = 0; i < kPoseKeypointCount; ++i) {
            const json& k = kp[i];
            if (!k.is_array() || k.size() != 3) throw ParseError(line_no, "keypoint must be [x,y,conf]");
            pose.kp[i].p = {finite_number(k[0], "keypoint", line_no), finite_number(k[1], "keypoint", line_no)};
            pose.kp[i].conf = finite_number(k[2], "confidence", line_no);
            if (pose.kp[i].conf < 0.0 || pose.kp[i].conf > 1.0)
                throw ParseError(line_no, "keypoint confidence must lie in [0,1]");
        }
        rec.payload = pose;
        break;
    }
    case RecordKind::Pupils:
        rec.payload = PupilsPayload{optional_point(obj, "left", line_no), optional_point(obj, "right", line_no)};
        break;
    }
    return rec;
}

std::string serialize_header(const SessionMeta& meta) {
    ordered_json h;
    h["format"] = kSessionFormat;
    h["subject"] = meta.subject;
    h["duration_s"] = meta.duration_s;
    return h.dump();
}

std::string serialize_record(const FeatureRecord& rec) {
    ordered_json j;
    j["t"] = rec.t;
    j["kind"] = kind_name(rec.kind());
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, AudioPayload>) {
                j["db"] = p.db;
            } else if constexpr (std::is_same_v<P, EmotionPayload>) {
                j["label"] = emotion_name(p.label);
            } else if constexpr (std::is_same_v<P, IdentityPayload>) {
                j["subject"] = p.subject;
                j["verified"] = p.verified;
            } else if constexpr (std::is_same_v<P, LandmarksPayload>) {
                auto pts = ordered_json::array();
                for (const auto& q : p.pts) pts.push_back(point_json(q));
                j["pts"] = std::move(pts);
            } else if constexpr (std::is_same_v<P, ObservedPayload>) {
                j["att"] = p.att;
            } else if constexpr (std::is_same_v<P, PosePayload>) {
                auto kp = ordered_json::array();
                for (const auto& k : p.kp) kp.push_back(ordered_json::array({k.p.x, k.p.y, k.conf}));
                j["kp"] = std::move(kp);
            } else if constexpr (std::is_same_v<P, PupilsPayload>) {
                j["left"] = p.left ? point_json(*p.left) : ordered_json(nullptr);
                j["right"] = p.right ? point_json(*p.right) : ordered_json(nullptr);
            }
        },
        rec.payload);
    return j.dump();
}

Session parse_session(std::istream& in, double watermark_skew) {
    Session s;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::optional<Timestamp> max_t;

    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        if (!have_header) {
            s.meta = parse_header_line(line, line_no);
            have_header = true;
            continue;
        }
        FeatureRecord rec = parse_record_line(line, line_no);
        if (max_t && rec.t < watermark(*max_t, watermark_skew)) {
            throw ParseError(line_no, "timestamp " + std::to_string(rec.t) + " is older than " +
                                          std::to_string(*max_t) + " by more than the allowed skew");
        }
        if (s.meta.duration_s > 0.0 && rec.t > s.meta.duration_s)
            throw ParseError(line_no, "timestamp " + std::to_string(rec.t) + " exceeds declared duration");
        max_t = max_t ? std::max(*max_t, rec.t) : rec.t;
        s.records.push_back(std::move(rec));
    }
    if (!have_header) throw ParseError(line_no == 0 ? 1 : line_no, "missing header line");

    std::stable_sort(s.records.begin(), s.records.end(), record_before);
    return s;
}

Session parse_session(std::string_view text, double watermark_skew) {
    std::istringstream in{std::string(text)};
    return parse_session(in, watermark_skew);
}

Session load_session(const std::string& path, double watermark_skew) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open session file: " + path);
    return parse_session(in, watermark_skew);
}

void write_session(std::ostream& out, const Session& session) {
    out << serialize_header(session.meta) << '\n';
    for (const auto& r : session.records) out << serialize_record(r) << '\n';
}

std::string serialize_session(const Session& session) {
    std::ostringstream out;
    write_session(out, session);
    return out.str();
}

bool window_finalizable(WindowIndex k, const WindowSpec& spec, Timestamp wm) noexcept {
    return wm >= spec.end(k);
}

void ReorderBuffer::push(FeatureRecord rec) {
    if (auto wm = watermark(); wm && rec.t < *wm) {
        throw ContractError("record at t=" + std::to_string(rec.t) + " arrived behind the watermark " +
                            std::to_string(*wm));
    }
    max_seen_ = max_seen_ ? std::max(*max_seen_, rec.t) : rec.t;
    heap_.push_back(Entry{std::move(rec), next_seq_++});
    std::push_heap(heap_.begin(), heap_.end(), Later{});
}

std::optional<Timestamp> ReorderBuffer::watermark() const noexcept {
    if (!max_seen_) return std::nullopt;
    return attnpipe::watermark(*max_seen_, skew_);
}

double parse_speed(std::string_view text) {
    if (text == "max" || text == "inf" || text == "batch") return kBatchSpeed;
    double v = 0.0;
    try {
        std::size_t used = 0;
        v = std::stod(std::string(text), &used);
        if (used != text.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw ConfigError("invalid speed '" + std::string(text) + "' (expected a positive number or 'max')");
    }
    if (!(v > 0.0)) throw ConfigError("speed must be > 0");
    return v;
}

ReplaySource::ReplaySource(const Session& session, double speed) : session_(session), speed_(speed) {
    if (!(speed > 0.0)) throw ContractError("replay speed must be > 0");
}

std::optional<FeatureRecord> ReplaySource::next() {
    if (pos_ >= session_.records.size()) return std::nullopt;
    const FeatureRecord& rec = session_.records[pos_++];
    if (std::isfinite(speed_)) {
        auto now = std::chrono::steady_clock::now();
        if (!start_) start_ = now;
        double offset = (rec.t - session_.records.front().t) / speed_;
        auto due = *start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                 std::chrono::duration<double>(offset));
        if (due > now) std::this_thread::sleep_until(due);
    }
    return rec;
}

LineStreamSource::LineStreamSource(std::istream& in) : in_(in) {
    std::string line;
    while (std::getline(in_, line)) {
        if (!blank(line)) {
            meta_ = parse_header_line(line, line_no_);
            return;
        }
        ++line_no_;
    }
    throw ParseError(line_no_, "missing header line");
}

std::optional<FeatureRecord> LineStreamSource::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_no_;
        if (blank(line)) continue;
        FeatureRecord rec = parse_record_line(line, line_no_);
        if (meta_.duration_s > 0.0 && rec.t > meta_.duration_s)
            throw ParseError(line_no_, "timestamp " + std::to_string(rec.t) + " exceeds declared duration");
        return rec;
    }
    return std::nullopt;
}

void replay(const Session& session, double speed, const std::function<void(const FeatureRecord&)>& sink) {
    ReplaySource src(session, speed);
    while (auto rec = src.next()) sink(*rec);
}

} // namespace attnpipe
