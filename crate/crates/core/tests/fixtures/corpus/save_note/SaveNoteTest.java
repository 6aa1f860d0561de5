package com.example.notes.test;

import io.appium.java_client.MobileElement;
import io.appium.java_client.android.AndroidDriver;
import org.junit.Test;

public class SaveNoteTest {
    private AndroidDriver<MobileElement> driver;

    @Test
    public void testSaveNote() {
        driver.findElementByXPath("//android.widget.EditText[@content-desc=\"Note title\"]").sendKeys("Groceries");
        driver.findElementByXPath("//android.widget.EditText[@content-desc=\"Note body\"]").sendKeys("milk and eggs");
        driver.findElementById("com.example.notes:id/btn_save").click();
    }
}
