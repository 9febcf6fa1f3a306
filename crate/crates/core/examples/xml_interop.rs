//! Export a model to BPMN 2.0 XML, import it again, and import a file from
//! another modeling tool.

use mao::diff::flatten;
use mao::dsl::{parse, serialize};
use mao::interop::{export_xml, graph_to_model, import_xml, xml_to_model};

const FOREIGN: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<bpmn:definitions xmlns:bpmn="http://www.omg.org/spec/BPMN/20100524/MODEL">
  <bpmn:process id="Process_1">
    <bpmn:laneSet><bpmn:lane id="L1" name="Clerk"><bpmn:flowNodeRef>T1</bpmn:flowNodeRef></bpmn:lane></bpmn:laneSet>
    <bpmn:startEvent id="S"/>
    <bpmn:userTask id="T1" name="Check order"/>
    <bpmn:intermediateCatchEvent id="W" name="wait a day"/>
    <bpmn:serviceTask id="T2" name="Send invoice"/>
    <bpmn:endEvent id="E"/>
    <bpmn:sequenceFlow id="f1" sourceRef="S" targetRef="T1"/>
    <bpmn:sequenceFlow id="f2" sourceRef="T1" targetRef="W"/>
    <bpmn:sequenceFlow id="f3" sourceRef="W" targetRef="T2"/>
    <bpmn:sequenceFlow id="f4" sourceRef="T2" targetRef="E"/>
  </bpmn:process>
</bpmn:definitions>"#;

fn main() {
    let model = parse(
        r#"<process name="onboarding">
  <activity role="hr" action="sign contract" id="a1"/>
  <parallelGateway id="g1">
    <branch><activity role="it" action="create account" id="a2"/></branch>
    <branch><activity role="facilities" action="assign desk" id="a3"/></branch>
  </parallelGateway>
</process>"#,
    )
    .unwrap();
    let xml = export_xml(&model).unwrap();
    println!("{xml}");

    let imported = import_xml(&xml).unwrap();
    assert_eq!(imported.graph, flatten(&model));
    let (back, _) = graph_to_model(&imported).unwrap();
    assert_eq!(back, model);
    println!("round trip ok: {} nodes, {} edges\n", imported.graph.len(), imported.graph.edges.len());

    let (foreign, notes) = xml_to_model(FOREIGN).unwrap();
    for n in &notes {
        println!("note: {n}");
    }
    print!("{}", serialize(&foreign).unwrap());
}
