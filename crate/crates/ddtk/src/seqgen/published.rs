//! Published normalized segment lengths for orders 1 through 8, reproduced
//! verbatim at 15-decimal precision. Row K holds the 3K+1 interval lengths of
//! the X, Z, X, Z, ... pulse pattern; at that precision the rows reproduce
//! all moments below 1e-9 but not the 1e-12 the optimizer itself reaches.

use crate::pauli::DecouplingGroup;
use crate::schedule::PulseSchedule;
use crate::seqgen::{alternating_xz, traversal_pattern};

pub const PUBLISHED_MAX_ORDER: usize = 8;

const ROW_1: [f64; 4] = [
    0.250000000000000,
    0.250000000000000,
    0.250000000000000,
    0.250000000000000,
];

const ROW_2: [f64; 7] = [
    0.078464834591372,
    0.124999999999999,
    0.171535165408626,
    0.250000000000001,
    0.171535165408628,
    0.125000000000001,
    0.078464834591374,
];

const ROW_3: [f64; 10] = [
    0.032292826653268,
    0.063198676159276,
    0.098322279339589,
    0.151677720660432,
    0.154508497187470,
    0.154508497187474,
    0.151677720660411,
    0.098322279339567,
    0.063198676159263,
    0.032292826653251,
];

const ROW_4: [f64; 13] = [
    0.015740558567996,
    0.034840993778921,
    0.058326727422055,
    0.092639337921122,
    0.109259441431874,
    0.122519668299637,
    0.133346545155644,
    0.122519668299808,
    0.109259441431969,
    0.092639337921442,
    0.058326727422301,
    0.034840993779070,
    0.015740558568160,
];

const ROW_5: [f64; 16] = [
    0.008599239338160,
    0.020714620114750,
    0.036488791784096,
    0.059197348763041,
    0.075300583772990,
    0.089748095447975,
    0.103048492653219,
    0.106902828125843,
    0.106902828125842,
    0.103048492653202,
    0.089748095447950,
    0.075300583772968,
    0.059197348763007,
    0.036488791784073,
    0.020714620114735,
    0.008599239338148,
];

const ROW_6: [f64; 19] = [
    0.005099840472689,
    0.013081296294727,
    0.023951104697432,
    0.039541779209467,
    0.052702696284812,
    0.065297618986759,
    0.077549425157617,
    0.085458220790868,
    0.090696933388149,
    0.093242169437664,
    0.090696933387990,
    0.085458220790698,
    0.077549425157258,
    0.065297618986355,
    0.052702696284446,
    0.039541779208967,
    0.023951104697093,
    0.013081296294494,
    0.005099840472515,
];

const ROW_7: [f64; 22] = [
    0.003218107155529,
    0.008668617548996,
    0.016370484427467,
    0.027437910209365,
    0.037772854809786,
    0.048100983157502,
    0.058499818469824,
    0.066844362503103,
    0.073589329135886,
    0.078650108193099,
    0.080847424390996,
    0.080847424390950,
    0.078650108192911,
    0.073589329135586,
    0.066844362502754,
    0.058499818469383,
    0.048100983157064,
    0.037772854809394,
    0.027437910208959,
    0.016370484427200,
    0.008668617548824,
    0.003218107155422,
];

const ROW_8: [f64; 25] = [
    0.002131868452877,
    0.005973589234768,
    0.011573393450091,
    0.019658348833883,
    0.027726790026254,
    0.036051120042435,
    0.044640380218587,
    0.052270651341861,
    0.059000709140531,
    0.064723118015122,
    0.068786226300013,
    0.071323172469493,
    0.072281264701016,
    0.071323172476857,
    0.068786226312206,
    0.064723118034568,
    0.059000709164710,
    0.052270651368313,
    0.044640380249883,
    0.036051120072752,
    0.027726790054342,
    0.019658348862506,
    0.011573393469221,
    0.005973589247443,
    0.002131868460270,
];

/// Published interval row for order `k`, or None outside 1..=8.
pub fn published_intervals(k: usize) -> Option<&'static [f64]> {
    match k {
        1 => Some(&ROW_1),
        2 => Some(&ROW_2),
        3 => Some(&ROW_3),
        4 => Some(&ROW_4),
        5 => Some(&ROW_5),
        6 => Some(&ROW_6),
        7 => Some(&ROW_7),
        8 => Some(&ROW_8),
        _ => None,
    }
}

/// Schedule built from the published row for order `k`: single-qubit group,
/// alternating X, Z pulses, cyclic closure.
pub fn published_schedule(k: usize) -> Option<PulseSchedule> {
    let intervals = published_intervals(k)?;
    let group = DecouplingGroup::single_qubit();
    let labels = traversal_pattern(&group, &alternating_xz(), intervals.len())
        .expect("X, Z traversal covers the single-qubit group");
    Some(
        PulseSchedule::from_intervals(group, intervals, labels, true)
            .expect("published rows are valid schedules"),
    )
}
