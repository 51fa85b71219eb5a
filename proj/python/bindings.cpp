#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "edgeflow/bench.hpp"
#include "edgeflow/policy.hpp"
#include "edgeflow/sim.hpp"

namespace py = pybind11;
using namespace edgeflow;

namespace {

py::dict rewrite(const std::string& flow, const std::string& remote_url, const std::string& policy) {
  const RewriteResult r = extract_offloadable(parse_flow(flow), remote_url, policy);
  py::dict out;
  out["local_flow"] = serialize_flow(r.local_flow);
  out["remote_flow"] = serialize_flow(r.remote_flow);
  out["offload_node_id"] = r.offload_node_id;
  out["flow_id"] = r.flow_id;
  return out;
}

std::vector<py::tuple> violations(const std::string& flow) {
  std::vector<py::tuple> out;
  for (const auto& v : validate(parse_flow_structure(flow)))
    out.push_back(py::make_tuple(std::string(to_string(v.code)), v.subject, v.detail));
  return out;
}

py::tuple decide_py(const std::string& policy, const MetricsSnapshot& snapshot) {
  const OffloadDecision d = decide(parse_policy(policy), snapshot);
  return py::make_tuple(std::string(to_string(d.target)), d.reason);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Flow offloading runtime: rewrite, policies and the virtual gateway";

  py::register_exception<FlowError>(m, "FlowError", PyExc_ValueError);
  py::register_exception<PolicyError>(m, "PolicyError", PyExc_ValueError);

  m.def("validate", &violations, py::arg("flow"), "Violations of a flow document as (code, subject, detail)");
  m.def("canonical", [](const std::string& flow) { return serialize_flow(parse_flow(flow)); }, py::arg("flow"));
  m.def("extract_offloadable", &rewrite, py::arg("flow"), py::arg("remote_url"), py::arg("policy"));
  m.def("parse_policy", [](const std::string& spec) { return to_string(parse_policy(spec)); }, py::arg("spec"),
        "Canonical form of a policy spec");

  py::class_<MetricsSnapshot>(m, "MetricsSnapshot")
      .def(py::init<>())
      .def(py::init([](double mem, double cpu, double temp, std::int64_t jobs, double freq) {
             MetricsSnapshot s;
             s.mem_util = mem;
             s.cpu_util = cpu;
             s.cpu_temp_c = temp;
             s.jobs_in_flight = jobs;
             s.cpu_freq_mhz = freq;
             return s;
           }),
           py::arg("mem_util") = 0.0, py::arg("cpu_util") = 0.0, py::arg("cpu_temp_c") = 45.0,
           py::arg("jobs_in_flight") = 0, py::arg("cpu_freq_mhz") = 1200.0)
      .def_readwrite("mem_util", &MetricsSnapshot::mem_util)
      .def_readwrite("cpu_util", &MetricsSnapshot::cpu_util)
      .def_readwrite("cpu_temp_c", &MetricsSnapshot::cpu_temp_c)
      .def_readwrite("jobs_in_flight", &MetricsSnapshot::jobs_in_flight)
      .def_readwrite("cpu_freq_mhz", &MetricsSnapshot::cpu_freq_mhz);

  m.def("decide", &decide_py, py::arg("policy"), py::arg("snapshot"), "Returns (target, reason)");

  py::class_<sim::GatewayModel>(m, "GatewayModel")
      .def(py::init<>())
      .def_readwrite("cores", &sim::GatewayModel::cores)
      .def_readwrite("freq_levels_mhz", &sim::GatewayModel::freq_levels_mhz)
      .def_readwrite("t_ambient_c", &sim::GatewayModel::t_ambient_c)
      .def_readwrite("t_limit_c", &sim::GatewayModel::t_limit_c)
      .def_readwrite("hysteresis_c", &sim::GatewayModel::hysteresis_c)
      .def_readwrite("heat_rate", &sim::GatewayModel::heat_rate)
      .def_readwrite("cool_rate", &sim::GatewayModel::cool_rate)
      .def_readwrite("power_exponent", &sim::GatewayModel::power_exponent)
      .def_readwrite("base_job_work", &sim::GatewayModel::base_job_work)
      .def_readwrite("duration_jitter", &sim::GatewayModel::duration_jitter)
      .def_readwrite("initial_temp_c", &sim::GatewayModel::initial_temp_c)
      .def("validate", &sim::GatewayModel::validate);

  py::class_<sim::RunningJob>(m, "RunningJob")
      .def(py::init<JobId, double>(), py::arg("id"), py::arg("remaining"))
      .def_readwrite("id", &sim::RunningJob::id)
      .def_readwrite("remaining", &sim::RunningJob::remaining);

  py::class_<sim::GatewayState>(m, "GatewayState")
      .def(py::init([](const sim::GatewayModel& model) { return sim::initial_state(model); }), py::arg("model"))
      .def_readwrite("clock_s", &sim::GatewayState::clock_s)
      .def_readwrite("temp_c", &sim::GatewayState::temp_c)
      .def_readwrite("freq_level", &sim::GatewayState::freq_level)
      .def_readwrite("running", &sim::GatewayState::running);

  m.def(
      "step",
      [](const sim::GatewayModel& model, const sim::GatewayState& state, double dt) {
        std::vector<sim::Completion> done;
        auto next = sim::step(model, state, dt, &done);
        std::vector<py::tuple> completed;
        for (const auto& c : done) completed.push_back(py::make_tuple(c.id, c.at_s));
        return py::make_tuple(next, completed);
      },
      py::arg("model"), py::arg("state"), py::arg("dt") = 0.1, "Returns (next_state, [(job_id, at_s)])");

  py::class_<JobRecord>(m, "JobRecord")
      .def_readonly("job_id", &JobRecord::job_id)
      .def_property_readonly("location", [](const JobRecord& r) { return std::string(to_string(r.location)); })
      .def_readonly("duration_s", &JobRecord::duration_s)
      .def_readonly("success", &JobRecord::success)
      .def_readonly("started_at", &JobRecord::started_at)
      .def_readonly("finished_at", &JobRecord::finished_at);

  py::class_<EngineStats>(m, "EngineStats")
      .def_readonly("jobs_total", &EngineStats::jobs_total)
      .def_readonly("local_count", &EngineStats::local_count)
      .def_readonly("local_fraction", &EngineStats::local_fraction)
      .def_readonly("avg_local_duration_s", &EngineStats::avg_local_duration_s)
      .def_readonly("max_local_duration_s", &EngineStats::max_local_duration_s)
      .def_readonly("success_ratio", &EngineStats::success_ratio);

  m.def("stats", [](const std::vector<JobRecord>& records) { return stats(records); }, py::arg("records"));

  py::class_<sim::SimResult>(m, "SimResult")
      .def_readonly("records", &sim::SimResult::records)
      .def_readonly("throttle_onset_s", &sim::SimResult::throttle_onset_s)
      .def_readonly("end_time_s", &sim::SimResult::end_time_s)
      .def_readonly("max_temp_c", &sim::SimResult::max_temp_c)
      .def_readonly("truncated", &sim::SimResult::truncated)
      .def_property_readonly("series_csv", [](const sim::SimResult& r) { return sim::series_to_csv(r.series); })
      .def_property_readonly("jobs_csv", [](const sim::SimResult& r) { return records_to_csv(r.records); });

  m.def(
      "simulate",
      [](const std::string& policy, const std::string& mode, int total_jobs, std::uint64_t seed, int parallelism,
         double inter_arrival_s, std::optional<sim::GatewayModel> model, double service_time_s, double rtt_s) {
        const auto workload = mode == "closed-loop"  ? sim::WorkloadSpec::closed_loop(parallelism, total_jobs, seed)
                              : mode == "open-loop" ? sim::WorkloadSpec::open_loop(inter_arrival_s, total_jobs, seed)
                                                    : throw std::invalid_argument("mode must be closed-loop or open-loop");
        return sim::simulate(model.value_or(sim::GatewayModel{}), workload, parse_policy(policy),
                             sim::RemoteModel{service_time_s, rtt_s});
      },
      py::arg("policy"), py::arg("mode") = "open-loop", py::arg("total_jobs") = 120, py::arg("seed") = 42,
      py::arg("parallelism") = 4, py::arg("inter_arrival_s") = 5.0, py::arg("model") = py::none(),
      py::arg("service_time_s") = 12.0, py::arg("rtt_s") = 0.2);
}
