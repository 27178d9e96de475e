//! The default supervisor and assistant agents.

use crate::react::AgentSpec;

use super::toolbox::Toolbox;

pub const SUPERVISOR_NAME: &str = "Supervisor";
pub const GENERAL_TOOLS: [&str; 3] = ["python_repl", "arxiv", "wikipedia"];
pub const MLFF_TOOLS: [&str; 2] = ["MLFF_MD", "MLFF_Elastic"];

/// (agent, endpoint tool, description shown to the supervisor)
pub const MP_ASSISTANTS: [(&str, &str, &str); 9] = [
    ("MPSummaryExpert", "search_materials_summary__get", "Combined material data drawn from many endpoints: composition, symmetry, sites, band gap, energies, moduli."),
    ("MPThermoExpert", "search_materials_thermo__get", "Thermodynamic data such as formation energy per atom and energy above hull."),
    ("MPElasticityExpert", "search_materials_elasticity__get", "Elastic properties: bulk, shear and Young's moduli, Poisson ratio, anisotropy."),
    ("MPMagnetismExpert", "search_materials_magnetism__get", "Magnetic ordering and magnetization data."),
    ("MPDielectricExpert", "search_materials_dielectric__get", "Dielectric constants from perturbation theory."),
    ("MPPiezoelectricExpert", "search_materials_piezoelectric__get", "Piezoelectric tensors and moduli from perturbation theory."),
    ("MPElectronicExpert", "search_materials_electronic_structure__get", "Electronic structure data: band gap, gap type, Fermi level."),
    ("MPSynthesisExpert", "search_materials_synthesis__get", "Literature synthesis recipes: targets, precursors and operations."),
    ("MPStructureRetriever", "search_materials_structure__get", "Fetches crystal structures and saves them as pymatgen Structure JSON files in the workspace."),
];

/// Supervisor plus every assistant whose tools exist in `toolbox`. The
/// supervisor also gets whichever general tools are registered.
pub fn standard_agents(toolbox: &Toolbox) -> (AgentSpec, Vec<AgentSpec>) {
    let mut assistants: Vec<AgentSpec> = MP_ASSISTANTS
        .iter()
        .filter(|(_, tool, _)| toolbox.contains(tool))
        .map(|(name, tool, desc)| AgentSpec::assistant(*name, *desc, vec![tool.to_string()]))
        .collect();
    let mlff: Vec<String> = MLFF_TOOLS.iter().filter(|t| toolbox.contains(t)).map(|t| t.to_string()).collect();
    if !mlff.is_empty() {
        assistants.push(AgentSpec::assistant(
            "MLFFAgent",
            "Runs molecular dynamics and elastic-constant calculations with pre-trained machine-learning force fields.",
            mlff,
        ));
    }
    let mut tools: Vec<String> = assistants.iter().map(|a| a.name.clone()).collect();
    tools.extend(GENERAL_TOOLS.iter().filter(|t| toolbox.contains(t)).map(|t| t.to_string()));
    (AgentSpec::supervisor(SUPERVISOR_NAME, tools), assistants)
}
