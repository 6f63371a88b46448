use std::fmt::Write as _;

use super::*;

/// Renders events as `tick,population,neuron` lines, population given by name.
/// Events are sorted by tick, population id, neuron before writing.
pub fn write_spike_csv<F: Scalar>(net: &Network<F>, events: &[SpikeEvent]) -> String {
    let mut sorted = events.to_vec();
    sorted.sort();
    let mut out = String::new();
    for e in sorted {
        writeln!(out, "{},{},{}", e.tick, net.population_name(e.population), e.neuron).unwrap();
    }
    out
}

/// Inverse of [`write_spike_csv`]. Unknown names and malformed lines are errors.
pub fn parse_spike_csv<F: Scalar>(net: &Network<F>, text: &str) -> Result<Vec<SpikeEvent>, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let mut parts = line.split(',');
            let (Some(tick), Some(pop), Some(neuron), None) = (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(format!("malformed line: {line}"));
            };
            let tick = tick.trim().parse().map_err(|_| format!("bad tick in: {line}"))?;
            let neuron = neuron.trim().parse().map_err(|_| format!("bad neuron in: {line}"))?;
            let population = net.population_by_name(pop.trim()).ok_or_else(|| format!("unknown population: {pop}"))?;
            Ok(SpikeEvent { tick, population, neuron })
        })
        .collect()
}
