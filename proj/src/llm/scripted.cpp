#include "litqa/llm/scripted.hpp"

#include <cstdio>
#include <fstream>

#include "litqa/corpus/tokenizer.hpp"

namespace litqa::llm {

namespace {

void fnv(std::uint64_t& h, std::string_view s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
}

void fnv_field(std::uint64_t& h, std::string_view s) {
    fnv(h, std::to_string(s.size()));
    fnv(h, ":");
    fnv(h, s);
}

std::uint64_t approx_tokens(std::string_view text) { return default_tokenizer().tokenize(text).size(); }

}  // namespace

std::string request_digest(TemplateId id, const Vars& vars) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    fnv_field(h, to_string(id));
    for (const auto& [k, v] : vars) {
        fnv_field(h, k);
        fnv_field(h, v);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ScriptEntry ScriptEntry::from_json(const nlohmann::json& j) {
    ScriptEntry e;
    auto tid = j.value("template_id", std::string("*"));
    if (tid != "*") {
        e.template_id = template_id_from_string(tid);
        if (!e.template_id) throw std::runtime_error("script: unknown template_id \"" + tid + "\"");
    }
    if (j.contains("variables_digest")) e.digest = j.at("variables_digest").get<std::string>();
    if (j.contains("match")) e.contains = j.at("match").get<Vars>();
    e.response = j.value("response", std::string());
    if (j.contains("response_template")) e.response_template = j.at("response_template").get<std::string>();
    e.echo = j.value("echo", false);
    if (j.contains("error")) e.error = j.at("error").get<std::string>();
    e.retriable = j.value("retriable", true);
    e.times = j.value("times", 0);
    return e;
}

ScriptedProvider::ScriptedProvider(std::vector<ScriptEntry> script, std::string id)
    : script_(std::move(script)), used_(script_.size(), 0), id_(std::move(id)) {}

std::vector<ScriptEntry> parse_script(const nlohmann::json& j) {
    const auto& arr = j.is_object() ? j.at("entries") : j;
    if (!arr.is_array()) throw std::runtime_error("script: expected an array of entries");
    std::vector<ScriptEntry> entries;
    for (const auto& e : arr) entries.push_back(ScriptEntry::from_json(e));
    return entries;
}

std::vector<ScriptEntry> load_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open script " + path);
    return parse_script(nlohmann::json::parse(in));
}

CompletionResult ScriptedProvider::complete(const CompletionRequest& req, const std::string& prompt) {
    std::string digest = request_digest(req.template_id, req.vars);
    const ScriptEntry* hit = nullptr;
    {
        std::lock_guard lock(mu_);
        calls_.push_back({req.template_id, digest, req.vars});
        for (std::size_t i = 0; i < script_.size(); ++i) {
            const auto& e = script_[i];
            if (e.times > 0 && used_[i] >= e.times) continue;
            if (e.template_id && *e.template_id != req.template_id) continue;
            if (e.digest && *e.digest != digest) continue;
            bool ok = true;
            for (const auto& [name, needle] : e.contains) {
                auto it = req.vars.find(name);
                if (it == req.vars.end() || it->second.find(needle) == std::string::npos) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            ++used_[i];
            hit = &e;
            break;
        }
    }
    if (!hit) throw ScriptMismatch(req.template_id, digest);
    if (hit->error) throw ProviderError(*hit->error, hit->retriable);

    CompletionResult r;
    if (hit->echo)
        r.text = prompt;
    else if (hit->response_template)
        r.text = render(*hit->response_template, req.vars);
    else
        r.text = hit->response;
    r.provider_id = id_;
    r.usage = {approx_tokens(prompt), approx_tokens(r.text)};
    return r;
}

std::vector<ScriptedProvider::Call> ScriptedProvider::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

std::size_t ScriptedProvider::call_count(TemplateId id) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& c : calls_) n += c.template_id == id;
    return n;
}

}  // namespace litqa::llm
