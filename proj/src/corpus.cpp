#include "vsum/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "vsum/log.hpp"
#include "vsum/sdmv.hpp"

VSUM_NS_BEGIN

namespace {

using nlohmann::json;

json parse_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open: " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

void check_id_charset(const std::string& id, const char* what) {
    if (id.empty()) {
        throw ValidationError(std::string(what) + " id is empty");
    }
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
        if (!ok) {
            throw ValidationError(std::string(what) + " id '" + id +
                                  "' contains characters unsafe for filenames");
        }
    }
}

void validate_fragments(const std::string& video_id, const std::vector<Fragment>& frags,
                        int n_frames) {
    if (frags.empty()) {
        throw ValidationError("video '" + video_id + "': empty fragmentation");
    }
    int expected_first = 0;
    for (const Fragment& f : frags) {
        if (f.first != expected_first || f.last < f.first) {
            throw ValidationError("video '" + video_id +
                                  "': fragments must be sorted, non-overlapping and cover all "
                                  "frames (offending fragment [" +
                                  std::to_string(f.first) + "," + std::to_string(f.last) + "])");
        }
        expected_first = f.last + 1;
    }
    if (expected_first != n_frames) {
        throw ValidationError("video '" + video_id + "': fragments cover frames 0.." +
                              std::to_string(expected_first - 1) + " but the video has " +
                              std::to_string(n_frames) + " frames");
    }
}

std::vector<TimedTranscript> load_transcripts(const std::filesystem::path& spans_path,
                                              const std::filesystem::path& emb_path,
                                              const std::string& video_id, int n_frames,
                                              int dim) {
    std::ifstream in(spans_path);
    if (!in) {
        throw IoError("cannot open: " + spans_path.string());
    }
    Tensor2 emb = read_sdmv(emb_path);
    if (emb.rows > 0 && emb.cols != dim) {
        throw ValidationError("video '" + video_id + "': transcript embeddings have dimension " +
                              std::to_string(emb.cols) + ", corpus dimension is " +
                              std::to_string(dim));
    }

    std::vector<TimedTranscript> result;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw FormatError("invalid JSONL in " + spans_path.string() + " line " +
                              std::to_string(line_no + 1) + ": " + e.what());
        }
        const int index = j.at("index").get<int>();
        double start_s = j.at("start_s").get<double>();
        double end_s = j.at("end_s").get<double>();
        if (index != line_no) {
            throw ValidationError("video '" + video_id + "': transcript line " +
                                  std::to_string(line_no) + " carries index " +
                                  std::to_string(index));
        }
        if (!(end_s > start_s)) {
            throw ValidationError("video '" + video_id + "': transcript " +
                                  std::to_string(index) + " has end_s <= start_s");
        }
        const double duration = static_cast<double>(n_frames);
        if (start_s < 0.0 || end_s > duration) {
            log_warn("video '" + video_id + "': transcript " + std::to_string(index) +
                     " span [" + std::to_string(start_s) + "," + std::to_string(end_s) +
                     ") clipped to video duration");
            start_s = std::max(start_s, 0.0);
            end_s = std::min(end_s, duration);
        }
        if (!(end_s > start_s)) {
            log_warn("video '" + video_id + "': transcript " + std::to_string(index) +
                     " lies outside the video, dropped");
            ++line_no;
            continue;
        }
        if (line_no >= emb.rows) {
            throw ValidationError("video '" + video_id + "': more transcript spans than " +
                                  "embedding rows (" + std::to_string(emb.rows) + ")");
        }
        TimedTranscript t;
        t.start_s = start_s;
        t.end_s = end_s;
        t.embedding.assign(emb.v.begin() + static_cast<std::ptrdiff_t>(line_no) * dim,
                           emb.v.begin() + static_cast<std::ptrdiff_t>(line_no + 1) * dim);
        result.push_back(std::move(t));
        ++line_no;
    }
    if (line_no != emb.rows) {
        throw ValidationError("video '" + video_id + "': " + std::to_string(line_no) +
                              " transcript spans but " + std::to_string(emb.rows) +
                              " embedding rows");
    }
    return result;
}

}  // namespace

int Corpus::video_index(const std::string& id) const {
    auto it = video_by_id_.find(id);
    return it == video_by_id_.end() ? -1 : it->second;
}

int Corpus::script_index(const std::string& id) const {
    auto it = script_by_id_.find(id);
    return it == script_by_id_.end() ? -1 : it->second;
}

int Corpus::gt_index_of_script(const std::string& script_id) const {
    auto it = gt_by_script_.find(script_id);
    return it == gt_by_script_.end() ? -1 : it->second;
}

std::vector<int> Corpus::scripts_of_video(int video_idx) const {
    if (video_idx < 0 || video_idx >= static_cast<int>(scripts_by_video_.size())) return {};
    return scripts_by_video_[static_cast<std::size_t>(video_idx)];
}

void Corpus::rebuild_indices() {
    video_by_id_.clear();
    script_by_id_.clear();
    gt_by_script_.clear();
    scripts_by_video_.assign(videos.size(), {});
    for (std::size_t i = 0; i < videos.size(); ++i) {
        if (!video_by_id_.emplace(videos[i].id, static_cast<int>(i)).second) {
            throw ValidationError("duplicate video id '" + videos[i].id + "'");
        }
    }
    for (std::size_t i = 0; i < scripts.size(); ++i) {
        if (!script_by_id_.emplace(scripts[i].id, static_cast<int>(i)).second) {
            throw ValidationError("duplicate script id '" + scripts[i].id + "'");
        }
        const int v = video_index(scripts[i].video_id);
        if (v < 0) {
            throw ValidationError("script '" + scripts[i].id + "' references unknown video '" +
                                  scripts[i].video_id + "'");
        }
        scripts_by_video_[static_cast<std::size_t>(v)].push_back(static_cast<int>(i));
    }
    for (std::size_t i = 0; i < ground_truths.size(); ++i) {
        const std::string& sid = ground_truths[i].script_id;
        if (script_index(sid) < 0) {
            throw ValidationError("ground truth references unknown script '" + sid + "'");
        }
        if (!gt_by_script_.emplace(sid, static_cast<int>(i)).second) {
            throw ValidationError("script '" + sid + "' has more than one ground truth");
        }
    }
}

Tensor2 expand_transcripts(const std::vector<TimedTranscript>& transcripts, int n_frames, int dim,
                           double frame_rate) {
    if (n_frames < 1) {
        throw ValidationError("expand_transcripts: n_frames must be >= 1");
    }
    if (frame_rate <= 0) {
        throw ValidationError("expand_transcripts: frame_rate must be positive");
    }
    Tensor2 out(n_frames, dim);
    for (int n = 0; n < n_frames; ++n) {
        const double frame_begin = n / frame_rate;
        const double frame_end = (n + 1) / frame_rate;
        int winner = -1;
        for (int k = 0; k < static_cast<int>(transcripts.size()); ++k) {
            const TimedTranscript& t = transcripts[static_cast<std::size_t>(k)];
            const double lo = std::max(t.start_s, frame_begin);
            const double hi = std::min(t.end_s, frame_end);
            if (hi <= lo) continue;  // needs positive-length intersection
            if (winner < 0) {
                winner = k;
                continue;
            }
            const TimedTranscript& w = transcripts[static_cast<std::size_t>(winner)];
            if (t.start_s < w.start_s ||
                (t.start_s == w.start_s && t.end_s - t.start_s > w.end_s - w.start_s)) {
                winner = k;
            }
        }
        if (winner >= 0) {
            const std::vector<Real>& e = transcripts[static_cast<std::size_t>(winner)].embedding;
            if (static_cast<int>(e.size()) != dim) {
                throw DimensionError("transcript embedding has size " +
                                     std::to_string(e.size()) + ", expected " +
                                     std::to_string(dim));
            }
            std::copy(e.begin(), e.end(), out.v.begin() + static_cast<std::ptrdiff_t>(n) * dim);
        }
    }
    return out;
}

std::vector<Fragment> uniform_fragments(int n_frames, int frames_per_fragment) {
    std::vector<Fragment> frags;
    for (int start = 0; start < n_frames; start += frames_per_fragment) {
        frags.push_back({start, std::min(start + frames_per_fragment, n_frames) - 1});
    }
    return frags;
}

Corpus load_corpus(const std::filesystem::path& manifest_path) {
    const json manifest = parse_json_file(manifest_path);
    const std::filesystem::path base = manifest_path.parent_path();

    Corpus corpus;
    try {
        corpus.dim = manifest.at("dimension").get<int>();
    } catch (const json::exception& e) {
        throw FormatError("manifest " + manifest_path.string() + ": " + e.what());
    }
    if (corpus.dim < 1) {
        throw ValidationError("corpus dimension must be >= 1, got " +
                              std::to_string(corpus.dim));
    }

    if (!manifest.contains("videos") || !manifest["videos"].is_array() ||
        manifest["videos"].empty()) {
        throw ValidationError("manifest lists no videos");
    }

    for (const json& jv : manifest["videos"]) {
        VideoRecord video;
        video.id = jv.at("id").get<std::string>();
        check_id_charset(video.id, "video");
        video.frames = read_sdmv(base / jv.at("frames").get<std::string>());
        if (video.frames.rows < 1) {
            throw ValidationError("video '" + video.id + "' has no frames");
        }
        if (video.frames.cols != corpus.dim) {
            throw ValidationError("video '" + video.id + "' has embedding dimension " +
                                  std::to_string(video.frames.cols) +
                                  ", corpus dimension is " + std::to_string(corpus.dim));
        }
        const int n = video.frames.rows;
        if (jv.contains("fragments")) {
            for (const json& jf : jv["fragments"]) {
                if (!jf.is_array() || jf.size() != 2) {
                    throw FormatError("video '" + video.id +
                                      "': fragments must be [first,last] pairs");
                }
                video.fragments.push_back({jf[0].get<int>(), jf[1].get<int>()});
            }
        } else {
            video.fragments = uniform_fragments(n);
        }
        validate_fragments(video.id, video.fragments, n);
        if (jv.contains("transcripts")) {
            const json& jt = jv["transcripts"];
            video.transcripts =
                load_transcripts(base / jt.at("spans").get<std::string>(),
                                 base / jt.at("embeddings").get<std::string>(), video.id, n,
                                 corpus.dim);
        }
        video.transcripts_expanded = expand_transcripts(video.transcripts, n, corpus.dim);
        corpus.videos.push_back(std::move(video));
    }

    if (manifest.contains("scripts")) {
        for (const json& js : manifest["scripts"]) {
            ScriptRecord script;
            script.id = js.at("id").get<std::string>();
            check_id_charset(script.id, "script");
            script.video_id = js.at("video_id").get<std::string>();
            script.sentences = read_sdmv(base / js.at("sentences").get<std::string>());
            if (script.sentences.rows < 1) {
                throw ValidationError("script '" + script.id + "' has no sentences");
            }
            if (script.sentences.cols != corpus.dim) {
                throw ValidationError("script '" + script.id + "' has embedding dimension " +
                                      std::to_string(script.sentences.cols) +
                                      ", corpus dimension is " + std::to_string(corpus.dim));
            }
            corpus.scripts.push_back(std::move(script));
        }
    }

    corpus.rebuild_indices();  // resolves references before ground-truth checks

    int with_importance = 0;
    if (manifest.contains("ground_truths")) {
        for (const json& jg : manifest["ground_truths"]) {
            GroundTruth gt;
            gt.script_id = jg.at("script_id").get<std::string>();
            const int sidx = corpus.script_index(gt.script_id);
            if (sidx < 0) {
                throw ValidationError("ground truth references unknown script '" + gt.script_id +
                                      "'");
            }
            const ScriptRecord& script = corpus.scripts[static_cast<std::size_t>(sidx)];
            const VideoRecord& video =
                corpus.videos[static_cast<std::size_t>(corpus.video_index(script.video_id))];
            for (const json& jm : jg.at("mask")) {
                const int bit = jm.get<int>();
                if (bit != 0 && bit != 1) {
                    throw ValidationError("ground truth for script '" + gt.script_id +
                                          "' has non-binary mask entries");
                }
                gt.mask.push_back(static_cast<std::uint8_t>(bit));
            }
            if (static_cast<int>(gt.mask.size()) != video.n_frames()) {
                throw ValidationError("ground truth for script '" + gt.script_id + "' has " +
                                      std::to_string(gt.mask.size()) + " mask entries, video '" +
                                      video.id + "' has " + std::to_string(video.n_frames()) +
                                      " frames");
            }
            if (jg.contains("importance")) {
                Tensor2 imp = read_sdmv(base / jg["importance"].get<std::string>());
                if (imp.size() != static_cast<std::size_t>(video.n_frames())) {
                    throw ValidationError("importance for script '" + gt.script_id + "' has " +
                                          std::to_string(imp.size()) + " values, video '" +
                                          video.id + "' has " +
                                          std::to_string(video.n_frames()) + " frames");
                }
                for (Real x : imp.v) {
                    if (!(x >= Real(0) && x <= Real(1))) {
                        throw ValidationError("importance for script '" + gt.script_id +
                                              "' has values outside [0,1]");
                    }
                }
                gt.importance = imp.v;
                ++with_importance;
            }
            corpus.ground_truths.push_back(std::move(gt));
        }
    }
    if (with_importance != 0 && with_importance != static_cast<int>(corpus.ground_truths.size())) {
        throw ValidationError(
            "corpus mixes ground truths with and without importance scores; annotation must be "
            "uniform");
    }
    corpus.importance_annotated = with_importance > 0;

    if (manifest.contains("splits")) {
        const json& js = manifest["splits"];
        auto read_split = [&](const char* name, std::vector<std::string>& out) {
            if (!js.contains(name)) return;
            for (const json& jid : js[name]) {
                const std::string id = jid.get<std::string>();
                if (corpus.video_index(id) < 0) {
                    throw ValidationError(std::string("split '") + name +
                                          "' references unknown video '" + id + "'");
                }
                out.push_back(id);
            }
        };
        read_split("train", corpus.split_train);
        read_split("val", corpus.split_val);
        read_split("test", corpus.split_test);
    }

    corpus.rebuild_indices();
    return corpus;
}

void write_corpus(const std::filesystem::path& dir, const Corpus& corpus,
                  const std::string& manifest_name) {
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["dimension"] = corpus.dim;
    manifest["videos"] = json::array();
    for (const VideoRecord& video : corpus.videos) {
        check_id_charset(video.id, "video");
        json jv;
        jv["id"] = video.id;
        const std::string frames_name = video.id + ".frames.sdmv";
        write_sdmv(dir / frames_name, video.frames);
        jv["frames"] = frames_name;
        if (!video.fragments.empty()) {
            jv["fragments"] = json::array();
            for (const Fragment& f : video.fragments) {
                jv["fragments"].push_back({f.first, f.last});
            }
        }
        if (!video.transcripts.empty() || video.transcripts_expanded.rows > 0) {
            const std::string spans_name = video.id + ".transcripts.jsonl";
            const std::string emb_name = video.id + ".transcripts.sdmv";
            std::ofstream spans(dir / spans_name);
            if (!spans) {
                throw IoError("cannot open for writing: " + (dir / spans_name).string());
            }
            Tensor2 emb(static_cast<int>(video.transcripts.size()), corpus.dim);
            for (std::size_t k = 0; k < video.transcripts.size(); ++k) {
                const TimedTranscript& t = video.transcripts[k];
                json jt;
                jt["index"] = static_cast<int>(k);
                jt["start_s"] = t.start_s;
                jt["end_s"] = t.end_s;
                spans << jt.dump() << "\n";
                std::copy(t.embedding.begin(), t.embedding.end(),
                          emb.v.begin() + static_cast<std::ptrdiff_t>(k) * corpus.dim);
            }
            write_sdmv(dir / emb_name, emb);
            jv["transcripts"] = {{"spans", spans_name}, {"embeddings", emb_name}};
        }
        manifest["videos"].push_back(std::move(jv));
    }
    manifest["scripts"] = json::array();
    for (const ScriptRecord& script : corpus.scripts) {
        check_id_charset(script.id, "script");
        json js;
        js["id"] = script.id;
        js["video_id"] = script.video_id;
        const std::string name = script.id + ".script.sdmv";
        write_sdmv(dir / name, script.sentences);
        js["sentences"] = name;
        manifest["scripts"].push_back(std::move(js));
    }
    manifest["ground_truths"] = json::array();
    for (const GroundTruth& gt : corpus.ground_truths) {
        json jg;
        jg["script_id"] = gt.script_id;
        jg["mask"] = json::array();
        for (std::uint8_t b : gt.mask) jg["mask"].push_back(static_cast<int>(b));
        if (gt.importance) {
            Tensor2 imp(1, static_cast<int>(gt.importance->size()));
            imp.v = *gt.importance;
            const std::string name = gt.script_id + ".importance.sdmv";
            write_sdmv(dir / name, imp);
            jg["importance"] = name;
        }
        manifest["ground_truths"].push_back(std::move(jg));
    }
    if (!corpus.split_train.empty() || !corpus.split_val.empty() || !corpus.split_test.empty()) {
        manifest["splits"] = {{"train", corpus.split_train},
                              {"val", corpus.split_val},
                              {"test", corpus.split_test}};
    }
    std::ofstream out(dir / manifest_name);
    if (!out) {
        throw IoError("cannot open for writing: " + (dir / manifest_name).string());
    }
    out << manifest.dump(2) << "\n";
}

void write_scores(const std::string& video_id, const FrameScores& scores,
                  const std::filesystem::path& out_path) {
    if (scores.values.empty()) {
        throw ValidationError("refusing to write empty scores for video '" + video_id + "'");
    }
    Tensor2 t(1, static_cast<int>(scores.values.size()));
    t.v = scores.values;
    write_sdmv(out_path, t);
}

std::vector<Real> read_scores(const std::filesystem::path& path) {
    Tensor2 t = read_sdmv(path);
    if (t.rows != 1) {
        throw FormatError("score file must hold a single row: " + path.string());
    }
    return t.v;
}

void write_summary(const std::string& video_id, const SummaryMask& mask,
                   const std::filesystem::path& out_path) {
    if (mask.empty()) {
        throw ValidationError("refusing to write empty summary for video '" + video_id + "'");
    }
    json j;
    j["video_id"] = video_id;
    j["mask"] = json::array();
    for (std::uint8_t b : mask) j["mask"].push_back(static_cast<int>(b));
    std::ofstream out(out_path);
    if (!out) {
        throw IoError("cannot open for writing: " + out_path.string());
    }
    out << j.dump() << "\n";
}

SummaryFile read_summary(const std::filesystem::path& path) {
    const json j = parse_json_file(path);
    SummaryFile s;
    s.video_id = j.at("video_id").get<std::string>();
    for (const json& jm : j.at("mask")) {
        s.mask.push_back(static_cast<std::uint8_t>(jm.get<int>()));
    }
    return s;
}

VSUM_NS_END
