#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "helioforge/calendar.hpp"
#include "helioforge/cleaning.hpp"
#include "helioforge/csv.hpp"
#include "helioforge/forecast_matrix.hpp"
#include "helioforge/kvdoc.hpp"
#include "helioforge/time_series.hpp"
#include "helioforge/workflow.hpp"

namespace helioforge {

enum class SourceKind { Sr, Gp, Service };

inline const char* source_kind_name(SourceKind k) {
    switch (k) {
        case SourceKind::Sr: return "sr";
        case SourceKind::Gp: return "gp";
        case SourceKind::Service: return "service";
    }
    return "sr";
}

inline SourceKind source_kind_from_name(const std::string& s) {
    if (s == "sr") return SourceKind::Sr;
    if (s == "gp") return SourceKind::Gp;
    if (s == "service" || s == "service_forecast") return SourceKind::Service;
    throw std::invalid_argument("unknown source kind: " + s);
}

/// One ingestion source: a file-drop directory of CSV files, or an http(s)
/// endpoint returning the same CSV payload.
struct DataSource {
    std::string location;
    SourceKind kind = SourceKind::Sr;

    bool is_http() const {
        return location.rfind("http://", 0) == 0 || location.rfind("https://", 0) == 0;
    }
};

struct ScheduleConfig {
    int cycle_minutes = 15;
    int lead_seconds = 60;  // fire one minute before each quarter-hour boundary
    std::vector<DataSource> sources;
    std::string data_dir = "service-data";
    std::string store_dir = "store";
    std::string output_dir = "predictions";
    int retention_days = 0;  // 0 keeps everything
    int poll_timeout_seconds = 20;
    int horizon = 96;
    std::int64_t step = 900;
    std::int64_t service_coarse_step = 10800;
    // Cleaning-chain parameters applied before each prediction.
    int outlier_window = 2;
    double outlier_threshold = 3.0;
    int max_gap = 3;

    void validate() const {
        if (cycle_minutes < 1) throw std::invalid_argument("schedule: cycle_minutes must be >= 1");
        if (lead_seconds < 0 || lead_seconds >= cycle_minutes * 60)
            throw std::invalid_argument("schedule: lead_seconds must be in [0, cycle_minutes*60)");
        if (step <= 0 || horizon < 1) throw std::invalid_argument("schedule: bad prediction grid");
        if (static_cast<std::int64_t>(cycle_minutes) * 60 % step != 0 &&
            step % (static_cast<std::int64_t>(cycle_minutes) * 60) != 0)
            throw std::invalid_argument("schedule: cycle and step must nest");
        if (data_dir.empty() || output_dir.empty() || store_dir.empty())
            throw std::invalid_argument("schedule: data_dir, store_dir, output_dir required");
        if (poll_timeout_seconds < 1)
            throw std::invalid_argument("schedule: poll_timeout_seconds must be >= 1");
    }

    KvDoc to_kvdoc() const {
        KvDoc doc;
        doc.set("kind", "schedule-config");
        doc.set_int("cycle_minutes", cycle_minutes);
        doc.set_int("lead_seconds", lead_seconds);
        doc.set("data_dir", data_dir);
        doc.set("store_dir", store_dir);
        doc.set("output_dir", output_dir);
        doc.set_int("retention_days", retention_days);
        doc.set_int("poll_timeout_seconds", poll_timeout_seconds);
        doc.set_int("horizon", horizon);
        doc.set_int("step", step);
        doc.set_int("service_coarse_step", service_coarse_step);
        doc.set_int("outlier_window", outlier_window);
        doc.set_double("outlier_threshold", outlier_threshold);
        doc.set_int("max_gap", max_gap);
        doc.set_int("source_count", static_cast<std::int64_t>(sources.size()));
        for (std::size_t i = 0; i < sources.size(); ++i)
            doc.set("source_" + std::to_string(i),
                    std::string(source_kind_name(sources[i].kind)) + " " + sources[i].location);
        return doc;
    }

    static ScheduleConfig from_kvdoc(const KvDoc& doc) {
        if (doc.get_or("kind", "schedule-config") != "schedule-config")
            throw std::runtime_error("not a schedule-config document");
        ScheduleConfig c;
        c.cycle_minutes = static_cast<int>(doc.get_int_or("cycle_minutes", c.cycle_minutes));
        c.lead_seconds = static_cast<int>(doc.get_int_or("lead_seconds", c.lead_seconds));
        c.data_dir = doc.get_or("data_dir", c.data_dir);
        c.store_dir = doc.get_or("store_dir", c.store_dir);
        c.output_dir = doc.get_or("output_dir", c.output_dir);
        c.retention_days = static_cast<int>(doc.get_int_or("retention_days", c.retention_days));
        c.poll_timeout_seconds =
            static_cast<int>(doc.get_int_or("poll_timeout_seconds", c.poll_timeout_seconds));
        c.horizon = static_cast<int>(doc.get_int_or("horizon", c.horizon));
        c.step = doc.get_int_or("step", c.step);
        c.service_coarse_step = doc.get_int_or("service_coarse_step", c.service_coarse_step);
        c.outlier_window = static_cast<int>(doc.get_int_or("outlier_window", c.outlier_window));
        c.outlier_threshold = doc.get_double_or("outlier_threshold", c.outlier_threshold);
        c.max_gap = static_cast<int>(doc.get_int_or("max_gap", c.max_gap));
        const std::int64_t n = doc.get_int_or("source_count", 0);
        for (std::int64_t i = 0; i < n; ++i) {
            const std::string raw = doc.get("source_" + std::to_string(i));
            const std::size_t sp = raw.find(' ');
            if (sp == std::string::npos)
                throw std::runtime_error("schedule: source entry needs '<kind> <location>'");
            DataSource src;
            src.kind = source_kind_from_name(raw.substr(0, sp));
            src.location = raw.substr(sp + 1);
            c.sources.push_back(std::move(src));
        }
        c.validate();
        return c;
    }

    static ScheduleConfig load(const std::string& path) {
        return from_kvdoc(KvDoc::load(path));
    }
    void save(const std::string& path) const { to_kvdoc().save(path); }
};

/// The origin labeling a cycle fired at `now`: the first grid boundary at or
/// after now + lead (firing one minute before 12:00 labels the 12:00 cycle).
inline UnixTime cycle_origin(UnixTime now, int cycle_minutes, int lead_seconds) {
    const std::int64_t c = static_cast<std::int64_t>(cycle_minutes) * 60;
    const UnixTime t = now + lead_seconds;
    return (t + c - 1) / c * c;
}

/// Injected time source so the scheduler is testable and replayable.
struct Clock {
    virtual ~Clock() = default;
    virtual UnixTime now() const = 0;
    virtual void sleep_until(UnixTime t) = 0;
};

struct ManualClock final : Clock {
    UnixTime current = 0;

    explicit ManualClock(UnixTime start = 0) : current(start) {}
    UnixTime now() const override { return current; }
    void sleep_until(UnixTime t) override { current = std::max(current, t); }
};

/// Wall clock. Sleeps in one-second slices so an installed `interrupted`
/// hook can wake it early (e.g. on SIGINT).
struct SystemClock final : Clock {
    std::function<bool()> interrupted;

    UnixTime now() const override { return static_cast<UnixTime>(std::time(nullptr)); }
    void sleep_until(UnixTime t) override {
        while (now() < t) {
            if (interrupted && interrupted()) return;
            std::this_thread::sleep_for(std::chrono::seconds(1));
        }
    }
};

struct PredictionRecord {
    UnixTime origin = 0;
    std::vector<double> sr_pred;
    std::vector<double> gp_pred;
    bool degraded = false;
};

namespace detail {

inline void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

inline std::string prediction_csv(const PredictionRecord& rec, std::int64_t step) {
    (void)step;
    std::ostringstream out;
    out << "origin,lead_step,sr_pred,gp_pred,degraded_flag\n";
    const std::string origin = format_iso8601(rec.origin);
    for (std::size_t k = 0; k < rec.sr_pred.size(); ++k)
        out << origin << ',' << k + 1 << ',' << csv_detail::format_value(rec.sr_pred[k]) << ','
            << csv_detail::format_value(rec.gp_pred[k]) << ',' << (rec.degraded ? 1 : 0) << '\n';
    return out.str();
}

}  // namespace detail

/// The five persisted tables behind the scheduler: raw_sr, raw_gp,
/// raw_service, clean_15min, predictions. Backed by one CSV file per table,
/// rewritten atomically; duplicate inserts are ignored by key (sample
/// timestamp for measurements, issue time for forecasts, origin for
/// prediction rows).
class Storage {
  public:
    explicit Storage(std::string dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
        load();
    }

    const std::map<UnixTime, double>& measurements(SourceKind kind) const {
        return kind == SourceKind::Gp ? raw_gp_ : raw_sr_;
    }
    const ServiceFeed& feed() const { return feed_; }
    const TimeSeries& clean_sr() const { return clean_sr_; }
    const TimeSeries& clean_gp() const { return clean_gp_; }
    const std::map<UnixTime, PredictionRecord>& predictions() const { return predictions_; }

    /// Insert measurement records newer than `since`, skipping timestamps
    /// already present. Returns the number actually inserted.
    std::size_t insert_measurements(SourceKind kind, const std::vector<CsvRow>& rows,
                                    UnixTime since = std::numeric_limits<UnixTime>::min()) {
        if (kind == SourceKind::Service)
            throw std::invalid_argument("storage: service records are forecast issues");
        std::map<UnixTime, double>& table = kind == SourceKind::Gp ? raw_gp_ : raw_sr_;
        std::size_t inserted = 0;
        for (const CsvRow& row : rows) {
            if (row.timestamp <= since && since != std::numeric_limits<UnixTime>::min()) continue;
            inserted += table.emplace(row.timestamp, row.value).second;
        }
        return inserted;
    }

    /// Insert forecast issues keyed by issue time; an already-known issue is
    /// ignored. Returns the number actually inserted.
    std::size_t insert_issues(const std::vector<ForecastIssue>& issues,
                              UnixTime since = std::numeric_limits<UnixTime>::min()) {
        std::size_t inserted = 0;
        for (const ForecastIssue& iss : issues) {
            if (iss.issue_time <= since && since != std::numeric_limits<UnixTime>::min()) continue;
            const auto match = [&iss](const ForecastIssue& have) {
                return have.issue_time == iss.issue_time;
            };
            if (std::any_of(feed_.issues.begin(), feed_.issues.end(), match)) continue;
            feed_.issues.push_back(iss);
            ++inserted;
        }
        if (inserted) feed_.sort_issues();
        return inserted;
    }

    void set_clean(TimeSeries sr, TimeSeries gp) {
        clean_sr_ = std::move(sr);
        clean_gp_ = std::move(gp);
    }

    void upsert_prediction(PredictionRecord rec) { predictions_[rec.origin] = std::move(rec); }

    UnixTime last_prediction_origin() const {
        return predictions_.empty() ? std::numeric_limits<UnixTime>::min()
                                    : predictions_.rbegin()->first;
    }

    /// Drop rows timestamped before `cutoff` from every table.
    void prune(UnixTime cutoff) {
        raw_sr_.erase(raw_sr_.begin(), raw_sr_.lower_bound(cutoff));
        raw_gp_.erase(raw_gp_.begin(), raw_gp_.lower_bound(cutoff));
        std::erase_if(feed_.issues,
                      [cutoff](const ForecastIssue& i) { return i.issue_time < cutoff; });
        while (!predictions_.empty() && predictions_.begin()->first < cutoff)
            predictions_.erase(predictions_.begin());
    }

    /// Rewrite every table atomically.
    void flush() const {
        write_raw("raw_sr.csv", raw_sr_);
        write_raw("raw_gp.csv", raw_gp_);
        {
            std::ostringstream out;
            write_service_csv(out, feed_);
            detail::atomic_write(table_path("raw_service.csv"), out.str());
        }
        {
            std::ostringstream out;
            out << "timestamp,sr,sr_flag,gp,gp_flag\n";
            for (std::size_t i = 0; i < clean_sr_.size(); ++i) {
                out << format_iso8601(clean_sr_.time_at(i)) << ','
                    << csv_detail::format_value(clean_sr_.values[i]) << ','
                    << flag_name(clean_sr_.flags[i]) << ',';
                const std::int64_t j =
                    clean_gp_.index_of(clean_sr_.time_at(i));  // grids may differ when one lags
                if (j >= 0)
                    out << csv_detail::format_value(clean_gp_.values[static_cast<std::size_t>(j)])
                        << ',' << flag_name(clean_gp_.flags[static_cast<std::size_t>(j)]);
                else
                    out << ",missing";
                out << '\n';
            }
            detail::atomic_write(table_path("clean_15min.csv"), out.str());
        }
        {
            std::ostringstream out;
            out << "origin,lead_step,sr_pred,gp_pred,degraded_flag\n";
            for (const auto& [origin, rec] : predictions_) {
                const std::string o = format_iso8601(origin);
                for (std::size_t k = 0; k < rec.sr_pred.size(); ++k)
                    out << o << ',' << k + 1 << ',' << csv_detail::format_value(rec.sr_pred[k])
                        << ',' << csv_detail::format_value(rec.gp_pred[k]) << ','
                        << (rec.degraded ? 1 : 0) << '\n';
            }
            detail::atomic_write(table_path("predictions.csv"), out.str());
        }
    }

  private:
    std::string table_path(const char* name) const {
        return (std::filesystem::path(dir_) / name).string();
    }

    void write_raw(const char* name, const std::map<UnixTime, double>& table) const {
        std::ostringstream out;
        out << "timestamp,value\n";
        for (const auto& [t, v] : table)
            out << format_iso8601(t) << ',' << csv_detail::format_value(v) << '\n';
        detail::atomic_write(table_path(name), out.str());
    }

    void load() {
        namespace fs = std::filesystem;
        const auto load_raw = [this](const char* name, std::map<UnixTime, double>& table) {
            const std::string path = table_path(name);
            if (!fs::exists(path)) return;
            std::ifstream in(path);
            for (const CsvRow& row : read_measurement_rows(in, path))
                table.emplace(row.timestamp, row.value);
        };
        load_raw("raw_sr.csv", raw_sr_);
        load_raw("raw_gp.csv", raw_gp_);
        if (fs::exists(table_path("raw_service.csv")))
            feed_ = read_service_csv(table_path("raw_service.csv"));
        if (fs::exists(table_path("predictions.csv"))) {
            std::ifstream in(table_path("predictions.csv"));
            std::string line;
            bool first = true;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                const auto fields = csv_detail::split_line(line);
                if (first) {
                    first = false;
                    if (csv_detail::looks_like_header(fields[0])) continue;
                }
                if (fields.size() < 5)
                    throw std::runtime_error("predictions table: need 5 columns");
                const UnixTime origin = parse_iso8601(fields[0]);
                PredictionRecord& rec = predictions_[origin];
                rec.origin = origin;
                const std::size_t lead = static_cast<std::size_t>(std::stoll(fields[1]));
                if (rec.sr_pred.size() < lead) {
                    rec.sr_pred.resize(lead, kMissingValue);
                    rec.gp_pred.resize(lead, kMissingValue);
                }
                rec.sr_pred[lead - 1] =
                    fields[2].empty() ? kMissingValue : std::stod(fields[2]);
                rec.gp_pred[lead - 1] =
                    fields[3].empty() ? kMissingValue : std::stod(fields[3]);
                rec.degraded = rec.degraded || fields[4] == "1";
            }
        }
        // The clean table is derived state, recomputed each cycle; it is
        // persisted for inspection but never read back.
    }

    std::string dir_;
    std::map<UnixTime, double> raw_sr_;
    std::map<UnixTime, double> raw_gp_;
    ServiceFeed feed_;
    TimeSeries clean_sr_;
    TimeSeries clean_gp_;
    std::map<UnixTime, PredictionRecord> predictions_;
};

/// Fetch hook for http(s) sources; installed by the host binary (the
/// library itself carries no HTTP client). Returns the response body,
/// throws on failure. An unset fetcher makes http sources unreachable.
using HttpFetcher = std::function<std::string(const std::string& url, int timeout_seconds)>;

struct PollResult {
    std::size_t inserted = 0;
    bool degraded = false;
    std::vector<std::string> errors;
};

/// Ingest every configured source: each CSV file in a drop directory, or
/// the body served by an http(s) endpoint. Records already present are
/// skipped, so re-polling is idempotent. An unreachable source is reported
/// in the result and the poll continues with the remaining sources.
inline PollResult poll_sources(const ScheduleConfig& cfg, Storage& storage,
                               const HttpFetcher& fetch = {},
                               UnixTime since = std::numeric_limits<UnixTime>::min()) {
    namespace fs = std::filesystem;
    PollResult result;
    for (const DataSource& src : cfg.sources) {
        try {
            std::vector<std::string> payloads;
            std::vector<std::string> names;
            if (src.is_http()) {
                if (!fetch) throw std::runtime_error("no http fetcher installed");
                payloads.push_back(fetch(src.location, cfg.poll_timeout_seconds));
                names.push_back(src.location);
            } else {
                if (!fs::is_directory(src.location))
                    throw std::runtime_error("drop directory missing: " + src.location);
                std::vector<fs::path> files;
                for (const auto& entry : fs::directory_iterator(src.location))
                    if (entry.is_regular_file() && entry.path().extension() == ".csv")
                        files.push_back(entry.path());
                std::sort(files.begin(), files.end());
                for (const fs::path& p : files) {
                    std::ifstream in(p);
                    if (!in) throw std::runtime_error("cannot open " + p.string());
                    std::ostringstream body;
                    body << in.rdbuf();
                    payloads.push_back(body.str());
                    names.push_back(p.string());
                }
            }
            for (std::size_t i = 0; i < payloads.size(); ++i) {
                std::istringstream in(payloads[i]);
                if (src.kind == SourceKind::Service) {
                    const ServiceFeed feed = service_feed_from_rows(
                        read_service_rows(in, names[i]), cfg.service_coarse_step);
                    result.inserted += storage.insert_issues(feed.issues, since);
                } else {
                    result.inserted += storage.insert_measurements(
                        src.kind, read_measurement_rows(in, names[i]), since);
                }
            }
        } catch (const std::exception& e) {
            result.degraded = true;
            result.errors.push_back(std::string(source_kind_name(src.kind)) + " source " +
                                    src.location + ": " + e.what());
        }
    }
    return result;
}

struct CycleResult {
    UnixTime origin = 0;
    bool ran = false;        // false when the origin was already served
    bool predicted = false;  // false when no prediction could be formed at all
    bool degraded = false;
    std::string sr_path;  // "full", "ari-only", "persistence", or "none"
    std::string gp_path;
    std::string output_file;
    std::size_t new_records = 0;
    std::vector<std::string> notes;
};

/// The scheduler: owns the persisted tables and the loaded predictor store,
/// runs the poll -> clean -> predict -> export cycle, and sleeps between
/// lead-adjusted boundaries. All state lives in the tables, so killing the
/// process between cycles and restarting reproduces the uninterrupted run.
class ServiceLoop {
  public:
    ServiceLoop(ScheduleConfig cfg, Clock& clock)
        : cfg_(std::move(cfg)), clock_(&clock), storage_(cfg_.data_dir) {
        cfg_.validate();
        store_ = load_store(cfg_.store_dir);
        store_stamp_ = store_meta_stamp();
    }

    HttpFetcher http_fetcher;

    const ScheduleConfig& config() const { return cfg_; }
    Storage& storage() { return storage_; }
    const PredictorStore& store() const { return store_; }

    /// Run the cycle for the origin implied by the clock. An origin that
    /// already has a persisted prediction is not recomputed.
    CycleResult run_cycle() {
        return run_cycle_at(cycle_origin(clock_->now(), cfg_.cycle_minutes, cfg_.lead_seconds));
    }

    /// The origin the next cycle will serve, respecting the already-served
    /// guard: never an origin at or before the last persisted prediction.
    UnixTime next_origin() const {
        const std::int64_t c = static_cast<std::int64_t>(cfg_.cycle_minutes) * 60;
        UnixTime origin = cycle_origin(clock_->now(), cfg_.cycle_minutes, cfg_.lead_seconds);
        const UnixTime served = storage_.last_prediction_origin();
        if (served != std::numeric_limits<UnixTime>::min() && origin <= served)
            origin = served + c;
        return origin;
    }

    /// Fire every cycle whose lead-adjusted boundary falls at or before
    /// `until`, sleeping (via the injected clock) between boundaries. An
    /// installed `stop` hook is polled between cycles. Returns the number
    /// of cycles run.
    std::size_t run(UnixTime until, const std::function<bool()>& stop = {}) {
        std::size_t cycles = 0;
        while (!(stop && stop())) {
            const UnixTime origin = next_origin();
            const UnixTime fire = origin - cfg_.lead_seconds;
            if (fire > until) break;
            clock_->sleep_until(fire);
            if (stop && stop()) break;
            run_cycle_at(origin);
            ++cycles;
        }
        return cycles;
    }

    CycleResult run_cycle_at(UnixTime origin) {
        CycleResult result;
        result.origin = origin;
        if (storage_.predictions().count(origin)) {
            result.notes.push_back("origin already served");
            return result;
        }
        result.ran = true;
        reload_store_if_changed(result);

        const PollResult poll = poll_sources(cfg_, storage_, http_fetcher);
        result.new_records = poll.inserted;
        result.degraded = poll.degraded;
        for (const std::string& e : poll.errors) result.notes.push_back(e);

        const TimeSeries sr_hist = cleaned_history(SourceKind::Sr, origin);
        const TimeSeries gp_hist = cleaned_history(SourceKind::Gp, origin);
        storage_.set_clean(sr_hist, gp_hist);

        PredictionRecord rec;
        rec.origin = origin;
        const std::vector<double> svc = storage_.feed().predict(origin, cfg_.horizon, cfg_.step);
        const bool service_available =
            std::any_of(svc.begin(), svc.end(), [](double v) { return !is_missing(v); });
        if (!service_available) result.notes.push_back("service forecast missing");

        rec.sr_pred = predict_chain(sr_hist, sr_hist, origin, service_available, "SR-5",
                                    result.sr_path, result.notes);
        rec.gp_pred = predict_chain(gp_hist, sr_hist, origin, service_available, "GP-4",
                                    result.gp_path, result.notes);
        rec.degraded = result.degraded || !service_available || result.sr_path != "full" ||
                       result.gp_path != "full";
        result.degraded = rec.degraded;
        result.predicted = result.sr_path != "none" || result.gp_path != "none";

        if (result.predicted) {
            storage_.upsert_prediction(rec);
            if (cfg_.retention_days > 0)
                storage_.prune(origin - static_cast<std::int64_t>(cfg_.retention_days) * 86400);
            storage_.flush();
            const std::string file =
                (std::filesystem::path(cfg_.output_dir) /
                 ("prediction_" + format_iso8601_file(origin) + ".csv"))
                    .string();
            detail::atomic_write(file, detail::prediction_csv(rec, cfg_.step));
            result.output_file = file;
        } else {
            storage_.flush();
        }
        return result;
    }

  private:
    /// Clean one raw table through the pipeline and truncate it strictly
    /// before the origin. Empty when the table holds fewer than two rows.
    TimeSeries cleaned_history(SourceKind kind, UnixTime origin) const {
        const std::map<UnixTime, double>& table = storage_.measurements(kind);
        std::vector<CsvRow> rows;
        rows.reserve(table.size());
        for (const auto& [t, v] : table)
            if (t < origin) rows.push_back({t, v, is_missing(v) ? Flag::Missing : Flag::Valid});
        if (rows.size() < 2) return {};
        TimeSeries raw = series_from_rows(std::move(rows));
        if (raw.size() >= 2 * static_cast<std::size_t>(cfg_.outlier_window) + 1)
            raw = detect_outliers_neighbor(raw, cfg_.outlier_window, cfg_.outlier_threshold);
        if (kind == SourceKind::Gp) {
            // Cross-match against the radiation record where the grids align.
            const TimeSeries sr = cleaned_raw(SourceKind::Sr, origin);
            if (!sr.empty() && sr.step == raw.step) {
                const UnixTime lo = std::max(sr.start_time, raw.start_time);
                const UnixTime hi = std::min(sr.end_time(), raw.end_time());
                if (hi > lo && (lo - raw.start_time) % raw.step == 0 &&
                    (lo - sr.start_time) % sr.step == 0) {
                    const auto ra = static_cast<std::size_t>((lo - raw.start_time) / raw.step);
                    const auto sa = static_cast<std::size_t>((lo - sr.start_time) / sr.step);
                    const auto n = static_cast<std::size_t>((hi - lo) / raw.step);
                    TimeSeries g = raw.slice({ra, ra + n});
                    const TimeSeries s = sr.slice({sa, sa + n});
                    const CrossMatchThresholds th = CrossMatchThresholds::from_peak(g.peak());
                    g = cross_match_outliers(g, s, th.gp_high, th.sr_low, th.gp_low, th.sr_high);
                    for (std::size_t i = 0; i < n; ++i) raw.flags[ra + i] = g.flags[i];
                }
            }
        }
        raw = fill_gaps(raw, cfg_.max_gap);
        if (raw.step != cfg_.step) raw = resample(raw, cfg_.step);
        return raw;
    }

    /// Outlier-flagged raw series (pre-gap-fill), for cross-matching.
    TimeSeries cleaned_raw(SourceKind kind, UnixTime origin) const {
        const std::map<UnixTime, double>& table = storage_.measurements(kind);
        std::vector<CsvRow> rows;
        for (const auto& [t, v] : table)
            if (t < origin) rows.push_back({t, v, is_missing(v) ? Flag::Missing : Flag::Valid});
        if (rows.size() < 2) return {};
        TimeSeries raw = series_from_rows(std::move(rows));
        if (raw.size() >= 2 * static_cast<std::size_t>(cfg_.outlier_window) + 1)
            raw = detect_outliers_neighbor(raw, cfg_.outlier_window, cfg_.outlier_threshold);
        return raw;
    }

    /// Full predictor, then the flagged ARI-only path when the service
    /// forecast is missing, then flagged persistence when the model cannot
    /// run (insufficient or stale history).
    std::vector<double> predict_chain(const TimeSeries& hist, const TimeSeries& sr_hist,
                                      UnixTime origin, bool service_available,
                                      const std::string& id, std::string& path,
                                      std::vector<std::string>& notes) {
        const bool gp = predictor_uses_gp(id);
        if (!hist.empty() && service_available) {
            try {
                const PredictorFn fn = make_predictor(store_, storage_.feed(), sr_hist, id);
                std::vector<double> out = fn(hist, origin);
                path = "full";
                return out;
            } catch (const std::exception& e) {
                notes.push_back(id + ": " + e.what());
            }
        }
        if (!hist.empty()) {
            try {
                const ModelParams& model = gp ? store_.gp_ari : store_.sr_ari;
                std::vector<double> out = predict_recursive(model, hist, nullptr, cfg_.horizon);
                path = "ari-only";
                return out;
            } catch (const std::exception& e) {
                notes.push_back(std::string(gp ? "gp" : "sr") + " ari fallback: " + e.what());
            }
            try {
                std::vector<double> out = persistence_predict(
                    hist, static_cast<int>(86400 / cfg_.step), cfg_.horizon);
                path = "persistence";
                return out;
            } catch (const std::exception& e) {
                notes.push_back(std::string(gp ? "gp" : "sr") + " persistence fallback: " +
                                e.what());
            }
        }
        path = "none";
        return std::vector<double>(static_cast<std::size_t>(cfg_.horizon), kMissingValue);
    }

    std::int64_t store_meta_stamp() const {
        namespace fs = std::filesystem;
        const fs::path meta = fs::path(cfg_.store_dir) / "store.meta";
        std::error_code ec;
        const auto t = fs::last_write_time(meta, ec);
        return ec ? 0 : static_cast<std::int64_t>(t.time_since_epoch().count());
    }

    void reload_store_if_changed(CycleResult& result) {
        const std::int64_t stamp = store_meta_stamp();
        if (stamp == store_stamp_) return;
        try {
            store_ = load_store(cfg_.store_dir);
            store_stamp_ = stamp;
            result.notes.push_back("predictor store reloaded");
        } catch (const std::exception& e) {
            result.notes.push_back(std::string("store reload failed, keeping previous: ") +
                                   e.what());
        }
    }

    ScheduleConfig cfg_;
    Clock* clock_;
    Storage storage_;
    PredictorStore store_;
    std::int64_t store_stamp_ = 0;
};

}  // namespace helioforge
