use std::str::FromStr;

use cbmor_core::rom::ModeCounts;

/// Mode counts as `I[,I...][:C]`: internal modes for every substructure (one value applies
/// to all) and an optional interface mode count. Without `:C`, or with `:none`, interfaces
/// stay unreduced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeSpec {
    pub internal: Vec<usize>,
    pub interface: Option<usize>,
}

impl FromStr for ModeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (int, itf) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b.trim())),
            None => (s, None),
        };
        let internal = int
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|e| format!("bad mode count `{t}`: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        if internal.contains(&0) {
            return Err("mode counts must be at least 1".into());
        }
        let interface = match itf {
            None | Some("none") => None,
            Some(t) => match t.parse::<usize>() {
                Ok(0) => return Err("interface mode count must be at least 1".into()),
                Ok(v) => Some(v),
                Err(e) => return Err(format!("bad interface mode count `{t}`: {e}")),
            },
        };
        Ok(Self { internal, interface })
    }
}

impl ModeSpec {
    pub fn counts(&self, n_substructures: usize, n_interfaces: usize) -> Result<ModeCounts, String> {
        let internal = match self.internal.len() {
            1 => vec![self.internal[0]; n_substructures],
            k if k == n_substructures => self.internal.clone(),
            k => return Err(format!("{k} internal mode counts for {n_substructures} substructures")),
        };
        Ok(ModeCounts { internal, interface: vec![self.interface; n_interfaces] })
    }
}
