//! Line-oriented datagram grammar.
//!
//! Requests are `<seq> SENSE`, `<seq> MOVE <F|L|R|B>` or `<seq> TURN <L|R|B>`; replies are
//! `<seq> OBST r f l g_r g_f g_l`, `<seq> OK` or `<seq> ERR <reason>`. Every datagram carries
//! exactly one line terminated by a single `\n`.

use std::fmt;

use spikenav_core::grid::Direction;

/// Motion relative to the robot's heading.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ego {
    Forward,
    Left,
    Right,
    Back,
}

impl Ego {
    /// The egocentric turn that takes `heading` to `target`.
    pub fn between(heading: Direction, target: Direction) -> Ego {
        if target == heading {
            Ego::Forward
        } else if target == heading.turn_left() {
            Ego::Left
        } else if target == heading.turn_right() {
            Ego::Right
        } else {
            Ego::Back
        }
    }

    pub fn apply(self, heading: Direction) -> Direction {
        match self {
            Ego::Forward => heading,
            Ego::Left => heading.turn_left(),
            Ego::Right => heading.turn_right(),
            Ego::Back => heading.opposite(),
        }
    }

    fn letter(self) -> char {
        match self {
            Ego::Forward => 'F',
            Ego::Left => 'L',
            Ego::Right => 'R',
            Ego::Back => 'B',
        }
    }

    fn parse(s: &str) -> Option<Ego> {
        match s {
            "F" => Some(Ego::Forward),
            "L" => Some(Ego::Left),
            "R" => Some(Ego::Right),
            "B" => Some(Ego::Back),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Sense,
    /// Turn as given, then advance one cell.
    Move(Ego),
    /// Turn in place. `Forward` is not a valid turn.
    Turn(Ego),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reply {
    /// Occupancy then goal flags, each ordered right, front, left.
    Obst { occupied: [bool; 3], goal: [bool; 3] },
    Ok,
    Err(String),
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Sense => write!(f, "SENSE"),
            Command::Move(e) => write!(f, "MOVE {}", e.letter()),
            Command::Turn(e) => write!(f, "TURN {}", e.letter()),
        }
    }
}

impl fmt::Display for Reply {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reply::Obst { occupied, goal } => {
                let b = |x: bool| u8::from(x);
                write!(
                    f,
                    "OBST {} {} {} {} {} {}",
                    b(occupied[0]),
                    b(occupied[1]),
                    b(occupied[2]),
                    b(goal[0]),
                    b(goal[1]),
                    b(goal[2])
                )
            }
            Reply::Ok => write!(f, "OK"),
            Reply::Err(reason) => write!(f, "ERR {reason}"),
        }
    }
}

pub fn encode<T: fmt::Display>(seq: u64, body: &T) -> String {
    format!("{seq} {body}\n")
}

/// Splits `<seq> <rest>\n`. `None` when the framing or tag is broken.
fn split(datagram: &str) -> Option<(u64, &str)> {
    let line = datagram.strip_suffix('\n')?;
    if line.contains('\n') {
        return None;
    }
    let (seq, rest) = line.split_once(' ')?;
    if seq.is_empty() || !seq.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((seq.parse().ok()?, rest))
}

/// The request tag, if the framing is intact, and the parsed command, if it is valid.
pub fn parse_request(datagram: &str) -> (Option<u64>, Option<Command>) {
    let Some((seq, rest)) = split(datagram) else {
        return (None, None);
    };
    let mut words = rest.split(' ');
    let cmd = match (words.next(), words.next(), words.next()) {
        (Some("SENSE"), None, _) => Some(Command::Sense),
        (Some("MOVE"), Some(e), None) => Ego::parse(e).map(Command::Move),
        (Some("TURN"), Some(e), None) => Ego::parse(e).filter(|&e| e != Ego::Forward).map(Command::Turn),
        _ => None,
    };
    (Some(seq), cmd)
}

pub fn parse_reply(datagram: &str) -> Option<(u64, Reply)> {
    let (seq, rest) = split(datagram)?;
    let reply = if rest == "OK" {
        Reply::Ok
    } else if let Some(reason) = rest.strip_prefix("ERR ") {
        Reply::Err(reason.to_string())
    } else {
        let flags = rest.strip_prefix("OBST ")?;
        let bits: Vec<bool> = flags
            .split(' ')
            .map(|w| match w {
                "0" => Some(false),
                "1" => Some(true),
                _ => None,
            })
            .collect::<Option<_>>()?;
        if bits.len() != 6 {
            return None;
        }
        Reply::Obst { occupied: [bits[0], bits[1], bits[2]], goal: [bits[3], bits[4], bits[5]] }
    };
    Some((seq, reply))
}
